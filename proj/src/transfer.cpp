#include "affinerf/transfer.hpp"

#include "affinerf/linalg.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace affinerf::transfer {

AffineTransform AffineTransform::identity(int d) {
    AffineTransform t;
    t.W = Matrix::Identity(d, d);
    t.v = Vector::Zero(d);
    t.lie = Vector::Zero(linalg::so_dim(d));
    return t;
}

int candidate_length(int d) { return d + linalg::so_dim(d); }

AffineTransform decode_candidate(const Vector& x, int d) {
    const int expected = candidate_length(d);
    if (x.size() != expected)
        throw std::invalid_argument("decode_candidate: expected length " +
                                    std::to_string(expected) + " for d=" + std::to_string(d) +
                                    ", received " + std::to_string(x.size()));
    AffineTransform t;
    t.v = x.head(d);
    t.lie = x.tail(linalg::so_dim(d));
    t.W = linalg::matrix_exp(linalg::pack_antisymmetric(t.lie, d));
    return t;
}

double transfer_loss(const forest::ForestModel& source, const AffineTransform& transform,
                     const Dataset& transfer_set) {
    if (transfer_set.n() < 1)
        throw std::invalid_argument("transfer_loss: empty transfer set");
    if (transform.dim() != source.dim || transfer_set.dim() != source.dim)
        throw std::invalid_argument("transfer_loss: dimension mismatch");
    const Matrix mapped =
        (transfer_set.X * transform.W.transpose()).rowwise() + transform.v.transpose();
    const Vector pred = source.predict_batch(mapped);
    return (pred - transfer_set.y).squaredNorm() / static_cast<double>(transfer_set.n());
}

Vector init_candidate(int d, Rng& rng) {
    if (d < 1)
        throw std::invalid_argument("init_candidate: dimension must be >= 1");
    constexpr double kPi = 3.14159265358979323846;
    Vector x(candidate_length(d));
    for (int i = 0; i < d; ++i)
        x[i] = rng.uniform(-0.5, 0.5);
    const int q = linalg::so_dim(d);
    for (int i = 0; i < q; ++i)
        x[d + i] = std::clamp(rng.normal(), -kPi, kPi);
    return x;
}

cmaes::SearchSpace make_search_space(int d, const TransferOptions& options) {
    const int n = candidate_length(d);
    cmaes::SearchSpace space;
    space.lower.resize(n);
    space.upper.resize(n);
    for (int i = 0; i < d; ++i) {
        space.lower[i] = -options.translation_bound;
        space.upper[i] = options.translation_bound;
    }
    for (int i = d; i < n; ++i) {
        space.lower[i] = -options.rotation_bound;
        space.upper[i] = options.rotation_bound;
    }
    return space;
}

double default_sigma0(int d, const TransferOptions& options) {
    const double q = linalg::so_dim(d);
    const double average_range =
        (d * 2.0 * options.translation_bound + q * 2.0 * options.rotation_bound) / (d + q);
    return average_range / 5.0;
}

TransferResult tl_cmaes(const forest::ForestModel& source, const Dataset& transfer_set,
                        const TransferOptions& options, Rng& rng) {
    if (!source.fitted())
        throw std::invalid_argument("tl_cmaes: source model is not fitted");
    if (transfer_set.n() < 1)
        throw std::invalid_argument("tl_cmaes: empty transfer set");
    if (transfer_set.dim() != source.dim)
        throw std::invalid_argument("tl_cmaes: transfer set dimension " +
                                    std::to_string(transfer_set.dim()) +
                                    " does not match model dimension " +
                                    std::to_string(source.dim));

    const int d = source.dim;
    const cmaes::SearchSpace space = make_search_space(d, options);
    const double sigma0 = options.sigma0 > 0.0 ? options.sigma0 : default_sigma0(d, options);

    cmaes::Objective objective = [&](const Vector& x) {
        return transfer_loss(source, decode_candidate(x, d), transfer_set);
    };

    cmaes::BipopOptions run;
    run.total_budget = options.budget;
    run.n_restarts = options.restarts;
    run.f_tol = options.f_tol;
    run.lambda = options.lambda;
    if (options.inject_identity)
        run.first_run_injections.push_back(Vector::Zero(candidate_length(d)));

    cmaes::InitSampler sampler = [d](Rng& r) { return init_candidate(d, r); };
    TransferResult result;
    result.opt = cmaes::bipop_run(objective, space, sampler, sigma0, run, rng);
    result.transform = decode_candidate(result.opt.best_x, d);
    return result;
}

double transferred_predict(const forest::ForestModel& source, const AffineTransform& transform,
                           const Vector& x) {
    if (x.size() != source.dim)
        throw std::invalid_argument("transferred_predict: expected dimension " +
                                    std::to_string(source.dim) + ", received " +
                                    std::to_string(x.size()));
    return source.predict(transform.W * x + transform.v);
}

Vector transferred_predict_batch(const forest::ForestModel& source,
                                 const AffineTransform& transform, const Matrix& X) {
    const Matrix mapped = (X * transform.W.transpose()).rowwise() + transform.v.transpose();
    return source.predict_batch(mapped);
}

namespace {
constexpr const char* kFormatTag = "affinerf.transform";
constexpr int kFormatVersion = 1;
} // namespace

void save_transform(const AffineTransform& transform, const std::string& path) {
    const int d = transform.dim();
    if (transform.lie.size() != linalg::so_dim(d))
        throw std::invalid_argument(
            "save_transform: transform carries no so(d) coordinates; only transforms decoded "
            "from candidates (or identity()) are persistable");
    nlohmann::json j;
    j["format"] = kFormatTag;
    j["version"] = kFormatVersion;
    j["dim"] = d;
    j["v"] = std::vector<double>(transform.v.data(), transform.v.data() + transform.v.size());
    j["z"] = std::vector<double>(transform.lie.data(), transform.lie.data() + transform.lie.size());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("save_transform: cannot open '" + path + "' for writing");
    out << j.dump();
    if (!out)
        throw std::runtime_error("save_transform: write to '" + path + "' failed");
}

AffineTransform load_transform(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("load_transform: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_transform: malformed file '" + path + "': " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormatTag)
            throw std::runtime_error("unrecognized format tag");
        if (j.at("version").get<int>() != kFormatVersion)
            throw std::runtime_error("unsupported format version");
        const int d = j.at("dim").get<int>();
        const auto v = j.at("v").get<std::vector<double>>();
        const auto z = j.at("z").get<std::vector<double>>();
        if (static_cast<int>(v.size()) != d || static_cast<int>(z.size()) != linalg::so_dim(d))
            throw std::runtime_error("inconsistent vector lengths");
        Vector vv = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        Vector zz = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
        Vector candidate(candidate_length(d));
        candidate << vv, zz;
        return decode_candidate(candidate, d);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_transform: malformed file '" + path + "': " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error("load_transform: malformed file '" + path + "': " + e.what());
    }
}

} // namespace affinerf::transfer
