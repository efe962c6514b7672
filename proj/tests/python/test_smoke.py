"""End-to-end smoke tests for the python bindings."""

import numpy as np
import pytest

import affinerf as rf


def test_pack_exp_against_scipy():
    scipy_linalg = pytest.importorskip("scipy.linalg")
    rng = np.random.default_rng(0)
    for d in (2, 3, 6):
        z = rng.uniform(-np.pi, np.pi, size=d * (d - 1) // 2)
        A = rf.pack_antisymmetric(z, d)
        assert np.allclose(A, -A.T)
        W = rf.matrix_exp(A)
        assert np.allclose(W, scipy_linalg.expm(A), atol=1e-12)
        assert np.allclose(W.T @ W, np.eye(d), atol=1e-10)
        np.testing.assert_array_equal(rf.unpack_antisymmetric(A), z)


def test_random_rotation_is_orthogonal_and_seeded():
    W1 = rf.random_rotation(4, seed=5)
    W2 = rf.random_rotation(4, seed=5)
    np.testing.assert_array_equal(W1, W2)
    assert np.allclose(W1.T @ W1, np.eye(4), atol=1e-12)
    assert np.linalg.det(W1) == pytest.approx(1.0, abs=1e-10)


def test_forest_fit_and_predict():
    X = rf.sample_uniform(400, 2, -5.0, 5.0, seed=1)
    y = (X**2).sum(axis=1)
    model = rf.fit_forest(X, y, rf.ForestParams(n_trees=50), seed=2)
    assert model.dim == 2
    assert model.n_trees == 50
    pred = model.predict_batch(X)
    assert rf.smape(y, pred) <= 0.05
    assert model.predict(X[0]) == pred[0]


def test_forest_save_load_roundtrip(tmp_path):
    X = rf.sample_uniform(100, 2, -5.0, 5.0, seed=3)
    y = (X**2).sum(axis=1)
    model = rf.fit_forest(X, y, rf.ForestParams(n_trees=10), seed=4)
    path = str(tmp_path / "model.json")
    model.save(path)
    loaded = rf.load_forest(path)
    np.testing.assert_array_equal(loaded.predict_batch(X), model.predict_batch(X))


def test_tl_cmaes_recovers_planted_transform():
    X = rf.sample_uniform(600, 2, -5.0, 5.0, seed=10)
    y = (X**2).sum(axis=1)
    model = rf.fit_forest(X, y, seed=11)

    w_star = rf.matrix_exp(rf.pack_antisymmetric(np.array([0.8]), 2))
    v_star = np.array([0.5, -0.3])
    Xt = rf.sample_uniform(100, 2, -5.0, 5.0, seed=12)
    yt = model.predict_batch(Xt @ w_star.T + v_star)

    options = rf.TransferOptions()
    options.budget = 8000
    transform, result = rf.tl_cmaes(model, Xt, yt, options, seed=13)
    assert result.evaluations <= options.budget
    assert result.best_f <= 0.05 * yt.var()
    assert transform.W.shape == (2, 2)

    pred = rf.transferred_predict(model, transform, Xt)
    assert rf.smape(yt, np.asarray(pred)) <= 0.2


def test_transform_roundtrip(tmp_path):
    t = rf.decode_candidate(np.array([0.4, -0.2, 1.1]), 2)
    path = str(tmp_path / "transform.json")
    t.save(path)
    back = rf.load_transform(path)
    np.testing.assert_array_equal(back.W, t.W)
    np.testing.assert_array_equal(back.v, t.v)


def test_instance_composition():
    inst = rf.make_instance("rastrigin", 2, seed=9)
    x = np.array([1.0, -2.0])
    assert inst.target_value(x) == pytest.approx(
        rf.eval_function("rastrigin", inst.hidden_w @ x + inst.hidden_v)
    )


def test_stats_api():
    h, p = rf.kruskal_wallis([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    assert h == pytest.approx(7.2, abs=1e-12)
    assert p == pytest.approx(float(np.exp(-3.6)), abs=1e-10)

    pairs = rf.dunn_posthoc([[1.0, 2.0, 3.0], [101.0, 102.0, 103.0]], alpha=0.05)
    assert len(pairs) == 1
    assert pairs[0]["significant"]
    assert pairs[0]["better"] == 0

    assert rf.smape(np.array([1.0]), np.array([3.0])) == 0.5
    assert rf.smape_diff_percent(0.1219, 0.0212) == pytest.approx(10.07)
