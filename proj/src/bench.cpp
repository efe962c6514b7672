#include "affinerf/bench.hpp"

#include "affinerf/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace affinerf::bench {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const std::vector<FunctionId>& all_functions() {
    static const std::vector<FunctionId> fns = {
        FunctionId::sphere,       FunctionId::ellipsoid, FunctionId::rastrigin,
        FunctionId::linear_slope, FunctionId::rosenbrock, FunctionId::different_powers};
    return fns;
}

std::string to_string(FunctionId id) {
    switch (id) {
    case FunctionId::sphere: return "sphere";
    case FunctionId::ellipsoid: return "ellipsoid";
    case FunctionId::rastrigin: return "rastrigin";
    case FunctionId::linear_slope: return "linear_slope";
    case FunctionId::rosenbrock: return "rosenbrock";
    case FunctionId::different_powers: return "different_powers";
    }
    return "unknown";
}

FunctionId function_from_string(const std::string& name) {
    if (name == "sphere" || name == "F1") return FunctionId::sphere;
    if (name == "ellipsoid" || name == "F2") return FunctionId::ellipsoid;
    if (name == "rastrigin" || name == "F3") return FunctionId::rastrigin;
    if (name == "linear_slope" || name == "F5") return FunctionId::linear_slope;
    if (name == "rosenbrock" || name == "F8") return FunctionId::rosenbrock;
    if (name == "different_powers" || name == "F14") return FunctionId::different_powers;
    throw std::invalid_argument("unknown benchmark function '" + name + "'");
}

double eval_function(FunctionId id, const Vector& x) {
    const int d = static_cast<int>(x.size());
    if (d < 1)
        throw std::invalid_argument("eval_function: empty input");
    switch (id) {
    case FunctionId::sphere:
        return x.squaredNorm();
    case FunctionId::ellipsoid: {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) {
            const double expo = d > 1 ? 6.0 * i / (d - 1.0) : 0.0;
            acc += std::pow(10.0, expo) * x[i] * x[i];
        }
        return acc;
    }
    case FunctionId::rastrigin: {
        double cos_sum = 0.0;
        for (int i = 0; i < d; ++i)
            cos_sum += std::cos(2.0 * kPi * x[i]);
        return 10.0 * (d - cos_sum) + x.squaredNorm();
    }
    case FunctionId::linear_slope: {
        double acc = 0.0;
        for (int i = 0; i < d; ++i)
            acc += 5.0 - x[i];
        return acc;
    }
    case FunctionId::rosenbrock: {
        if (d < 2)
            throw std::invalid_argument("rosenbrock: needs dimension >= 2");
        double acc = 0.0;
        for (int i = 0; i + 1 < d; ++i) {
            const double a = x[i] * x[i] - x[i + 1];
            const double b = x[i] - 1.0;
            acc += 100.0 * a * a + b * b;
        }
        return acc;
    }
    case FunctionId::different_powers: {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) {
            const double expo = d > 1 ? 2.0 + 4.0 * i / (d - 1.0) : 2.0;
            acc += std::pow(std::abs(x[i]), expo);
        }
        return acc;
    }
    }
    throw std::invalid_argument("eval_function: unknown function id");
}

std::function<double(const Vector&)> TransferInstance::source_fn() const {
    const FunctionId id = fid;
    return [id](const Vector& x) { return eval_function(id, x); };
}

std::function<double(const Vector&)> TransferInstance::target_fn() const {
    return [self = *this](const Vector& x) { return self.target_value(x); };
}

TransferInstance make_instance(FunctionId fid, int d, std::uint64_t seed) {
    if (d < 2)
        throw std::invalid_argument("make_instance: dimension must be >= 2");
    TransferInstance inst;
    inst.fid = fid;
    inst.dim = d;
    inst.seed = seed;
    Rng rng(seed);
    inst.hidden.W = linalg::random_rotation(d, rng);
    inst.hidden.v.resize(d);
    for (int i = 0; i < d; ++i)
        inst.hidden.v[i] = rng.uniform(-1.0, 1.0);
    return inst;
}

Matrix sample_uniform(int n, int d, double lo, double hi, Rng& rng) {
    if (n < 1 || d < 1)
        throw std::invalid_argument("sample_uniform: n and d must be >= 1");
    if (!(lo < hi))
        throw std::invalid_argument("sample_uniform: lo must be below hi");
    Matrix X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            X(i, j) = rng.uniform(lo, hi);
    return X;
}

Dataset build_dataset(const std::function<double(const Vector&)>& fn, const Matrix& X,
                      bool log_transform, double epsilon) {
    if (log_transform && !(epsilon > 0.0))
        throw std::invalid_argument("build_dataset: epsilon must be positive for the log transform");
    Dataset data;
    data.X = X;
    data.y.resize(X.rows());
    Vector row(X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        row = X.row(i);
        double v = fn(row);
        if (log_transform)
            v = std::log10(v + epsilon);
        if (!std::isfinite(v))
            throw std::runtime_error("build_dataset: non-finite value at row " + std::to_string(i));
        data.y[i] = v;
    }
    return data;
}

} // namespace affinerf::bench
