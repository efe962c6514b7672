#include "affinerf/bench.hpp"
#include "affinerf/csv.hpp"
#include "affinerf/forest.hpp"
#include "affinerf/linalg.hpp"
#include "affinerf/stats.hpp"
#include "affinerf/transfer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace affinerf;

namespace {

Dataset make_dataset(const Matrix& X, const Vector& y) { return Dataset(X, y); }

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Random-forest surrogate transfer under affine domain shift";

    // --- linalg ---
    m.def("so_dim", &linalg::so_dim, py::arg("d"));
    m.def(
        "pack_antisymmetric",
        [](const Vector& z, int d) { return linalg::pack_antisymmetric(z, d); },
        py::arg("z"), py::arg("d"),
        "Row-major upper-triangle packing of so(d) coordinates.");
    m.def(
        "unpack_antisymmetric",
        [](const Matrix& A) { return linalg::unpack_antisymmetric(A); }, py::arg("A"));
    m.def("matrix_exp", &linalg::matrix_exp, py::arg("A"));
    m.def(
        "random_rotation",
        [](int d, std::uint64_t seed) {
            Rng rng(seed);
            return linalg::random_rotation(d, rng);
        },
        py::arg("d"), py::arg("seed"), "Haar-distributed rotation matrix.");

    // --- forest ---
    py::class_<forest::ForestParams>(m, "ForestParams")
        .def(py::init([](int n_trees, std::optional<int> max_depth, int min_samples_split,
                         int min_samples_leaf, double max_features_fraction, bool bootstrap) {
                 forest::ForestParams p;
                 p.n_trees = n_trees;
                 p.max_depth = max_depth;
                 p.min_samples_split = min_samples_split;
                 p.min_samples_leaf = min_samples_leaf;
                 p.max_features_fraction = max_features_fraction;
                 p.bootstrap = bootstrap;
                 return p;
             }),
             py::arg("n_trees") = 100, py::arg("max_depth") = std::nullopt,
             py::arg("min_samples_split") = 2, py::arg("min_samples_leaf") = 1,
             py::arg("max_features_fraction") = 1.0, py::arg("bootstrap") = true)
        .def_readwrite("n_trees", &forest::ForestParams::n_trees)
        .def_readwrite("max_depth", &forest::ForestParams::max_depth)
        .def_readwrite("min_samples_split", &forest::ForestParams::min_samples_split)
        .def_readwrite("min_samples_leaf", &forest::ForestParams::min_samples_leaf)
        .def_readwrite("max_features_fraction", &forest::ForestParams::max_features_fraction)
        .def_readwrite("bootstrap", &forest::ForestParams::bootstrap);

    py::class_<forest::ForestModel>(m, "ForestModel")
        .def_property_readonly("dim", [](const forest::ForestModel& f) { return f.dim; })
        .def_property_readonly("n_trees",
                               [](const forest::ForestModel& f) { return f.trees.size(); })
        .def("predict", &forest::ForestModel::predict, py::arg("x"))
        .def("predict_batch", &forest::ForestModel::predict_batch, py::arg("X"))
        .def("save", &forest::save_model, py::arg("path"));

    m.def(
        "fit_forest",
        [](const Matrix& X, const Vector& y, const forest::ForestParams& params,
           std::uint64_t seed) {
            return forest::fit_forest(make_dataset(X, y), params, Rng(seed));
        },
        py::arg("X"), py::arg("y"), py::arg("params") = forest::ForestParams{},
        py::arg("seed") = 0);
    m.def("load_forest", &forest::load_model, py::arg("path"));

    // --- transfer ---
    py::class_<transfer::AffineTransform>(m, "AffineTransform")
        .def_readonly("W", &transfer::AffineTransform::W)
        .def_readonly("v", &transfer::AffineTransform::v)
        .def_readonly("lie", &transfer::AffineTransform::lie)
        .def_static("identity", &transfer::AffineTransform::identity, py::arg("d"))
        .def("save", &transfer::save_transform, py::arg("path"));

    py::class_<transfer::TransferOptions>(m, "TransferOptions")
        .def(py::init<>())
        .def_readwrite("budget", &transfer::TransferOptions::budget)
        .def_readwrite("restarts", &transfer::TransferOptions::restarts)
        .def_readwrite("f_tol", &transfer::TransferOptions::f_tol)
        .def_readwrite("lambda_", &transfer::TransferOptions::lambda)
        .def_readwrite("sigma0", &transfer::TransferOptions::sigma0)
        .def_readwrite("inject_identity", &transfer::TransferOptions::inject_identity);

    py::class_<cmaes::OptimResult>(m, "OptimResult")
        .def_readonly("best_x", &cmaes::OptimResult::best_x)
        .def_readonly("best_f", &cmaes::OptimResult::best_f)
        .def_readonly("evaluations", &cmaes::OptimResult::evaluations)
        .def_readonly("restarts_used", &cmaes::OptimResult::restarts_used)
        .def_property_readonly("reason", [](const cmaes::OptimResult& r) {
            return std::string(cmaes::to_string(r.reason));
        });

    m.def("decode_candidate", &transfer::decode_candidate, py::arg("x"), py::arg("d"));
    m.def(
        "transfer_loss",
        [](const forest::ForestModel& model, const transfer::AffineTransform& t, const Matrix& X,
           const Vector& y) { return transfer::transfer_loss(model, t, make_dataset(X, y)); },
        py::arg("model"), py::arg("transform"), py::arg("X"), py::arg("y"));
    m.def(
        "tl_cmaes",
        [](const forest::ForestModel& model, const Matrix& X, const Vector& y,
           const transfer::TransferOptions& options, std::uint64_t seed) {
            Rng rng(seed);
            auto result = transfer::tl_cmaes(model, make_dataset(X, y), options, rng);
            return py::make_tuple(result.transform, result.opt);
        },
        py::arg("model"), py::arg("X"), py::arg("y"),
        py::arg("options") = transfer::TransferOptions{}, py::arg("seed") = 0,
        "Fit the affine transform on a transfer set; returns (transform, optim_result).");
    m.def(
        "transferred_predict",
        [](const forest::ForestModel& model, const transfer::AffineTransform& t, const Matrix& X) {
            return transfer::transferred_predict_batch(model, t, X);
        },
        py::arg("model"), py::arg("transform"), py::arg("X"));
    m.def("load_transform", &transfer::load_transform, py::arg("path"));

    // --- bench ---
    m.def(
        "eval_function",
        [](const std::string& name, const Vector& x) {
            return bench::eval_function(bench::function_from_string(name), x);
        },
        py::arg("name"), py::arg("x"));
    m.def("benchmark_functions", []() {
        std::vector<std::string> names;
        for (auto id : bench::all_functions())
            names.push_back(bench::to_string(id));
        return names;
    });

    py::class_<bench::TransferInstance>(m, "TransferInstance")
        .def_property_readonly("function",
                               [](const bench::TransferInstance& i) { return to_string(i.fid); })
        .def_property_readonly("dim", [](const bench::TransferInstance& i) { return i.dim; })
        .def_property_readonly("hidden_w",
                               [](const bench::TransferInstance& i) { return i.hidden.W; })
        .def_property_readonly("hidden_v",
                               [](const bench::TransferInstance& i) { return i.hidden.v; })
        .def("source_value", &bench::TransferInstance::source_value, py::arg("x"))
        .def("target_value", &bench::TransferInstance::target_value, py::arg("x"));

    m.def(
        "make_instance",
        [](const std::string& name, int d, std::uint64_t seed) {
            return bench::make_instance(bench::function_from_string(name), d, seed);
        },
        py::arg("name"), py::arg("d"), py::arg("seed"));
    m.def(
        "sample_uniform",
        [](int n, int d, double lo, double hi, std::uint64_t seed) {
            Rng rng(seed);
            return bench::sample_uniform(n, d, lo, hi, rng);
        },
        py::arg("n"), py::arg("d"), py::arg("lo") = -5.0, py::arg("hi") = 5.0,
        py::arg("seed") = 0);

    // --- stats ---
    m.def("smape", &stats::smape, py::arg("y_true"), py::arg("y_pred"));
    m.def(
        "kruskal_wallis",
        [](const std::vector<std::vector<double>>& groups) {
            const auto r = stats::kruskal_wallis(groups);
            return py::make_tuple(r.h, r.p);
        },
        py::arg("groups"));
    m.def(
        "dunn_posthoc",
        [](const std::vector<std::vector<double>>& groups, double alpha) {
            py::list out;
            for (const auto& c : stats::dunn_posthoc(groups, alpha)) {
                py::dict d;
                d["a"] = c.a;
                d["b"] = c.b;
                d["z"] = c.z;
                d["p_adjusted"] = c.p_adjusted;
                d["significant"] = c.significant;
                d["better"] = c.better;
                out.append(d);
            }
            return out;
        },
        py::arg("groups"), py::arg("alpha") = 0.05);
    m.def("smape_diff_percent", &stats::smape_diff_percent, py::arg("scratch_mean"),
          py::arg("transferred_mean"));

#ifdef VERSION_INFO
#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = "0.1.0";
#endif
}
