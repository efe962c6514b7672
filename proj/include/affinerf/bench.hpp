#pragma once

#include "affinerf/dataset.hpp"
#include "affinerf/rng.hpp"
#include "affinerf/transfer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace affinerf::bench {

/// Canonical test functions, all nonnegative on [-5,5]^d with minimum 0
/// (linear_slope attains its box minimum 0 at the corner x = (5,...,5) and is
/// affine, so it goes negative outside the box).
enum class FunctionId { sphere, ellipsoid, rastrigin, linear_slope, rosenbrock, different_powers };

const std::vector<FunctionId>& all_functions();
std::string to_string(FunctionId id);
/// Accepts the canonical names plus the BBOB aliases F1, F2, F3, F5, F8, F14.
FunctionId function_from_string(const std::string& name);

double eval_function(FunctionId id, const Vector& x);

/// A source function paired with a hidden affine transform; the target is
/// target(x) = source(W x + v). The hidden transform is test-oracle material
/// and never flows into the transfer optimizer.
struct TransferInstance {
    FunctionId fid = FunctionId::sphere;
    int dim = 0;
    std::uint64_t seed = 0;
    transfer::AffineTransform hidden;
    double lo = -5.0;
    double hi = 5.0;

    double source_value(const Vector& x) const { return eval_function(fid, x); }
    double target_value(const Vector& x) const {
        return eval_function(fid, hidden.W * x + hidden.v);
    }
    std::function<double(const Vector&)> source_fn() const;
    std::function<double(const Vector&)> target_fn() const;
};

/// Rotation drawn Haar-uniform, translation i.i.d. uniform on [-1, 1];
/// reproducible from (fid, d, seed).
TransferInstance make_instance(FunctionId fid, int d, std::uint64_t seed);

Matrix sample_uniform(int n, int d, double lo, double hi, Rng& rng);

/// Evaluates fn on the rows of X; with log_transform the targets become
/// log10(fn(x) + epsilon) (function values are already relative to the suite
/// minimum of 0). Non-finite results raise with the offending row.
Dataset build_dataset(const std::function<double(const Vector&)>& fn, const Matrix& X,
                      bool log_transform, double epsilon);

} // namespace affinerf::bench
