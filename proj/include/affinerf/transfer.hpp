#pragma once

#include "affinerf/cmaes.hpp"
#include "affinerf/dataset.hpp"
#include "affinerf/forest.hpp"
#include "affinerf/rng.hpp"

#include <string>

namespace affinerf::transfer {

/// Rotation plus translation; reparameterizes a source model as
/// f(W x + v). lie holds the so(d) coordinates that produced W when the
/// transform came from a candidate vector or a file (empty otherwise).
struct AffineTransform {
    Matrix W;
    Vector v;
    Vector lie;

    int dim() const { return static_cast<int>(v.size()); }

    static AffineTransform identity(int d);
};

/// Candidate layout: first d entries are the translation, the remaining
/// d(d-1)/2 are the row-major upper-triangle coordinates of so(d).
int candidate_length(int d);

AffineTransform decode_candidate(const Vector& x, int d);

/// Mean squared error of the transferred prediction over the transfer set:
/// (1/n) sum (source(W x_i + v) - y_i)^2.
double transfer_loss(const forest::ForestModel& source, const AffineTransform& transform,
                     const Dataset& transfer_set);

/// Translation uniform on [-0.5, 0.5] per coordinate; rotation coordinates
/// from the upper triangle of a standard-Gaussian antisymmetric matrix, each
/// clipped to [-pi, pi].
Vector init_candidate(int d, Rng& rng);

struct TransferOptions {
    long long budget = 10000;
    int restarts = 3;
    double f_tol = 1e-12;
    int lambda = 0;         // 0 = default population size
    double sigma0 = 0.0;    // 0 = one-fifth of the average coordinate range
    bool inject_identity = true;
    double translation_bound = 1.5;
    double rotation_bound = 3.14159265358979323846;
};

cmaes::SearchSpace make_search_space(int d, const TransferOptions& options);
double default_sigma0(int d, const TransferOptions& options);

struct TransferResult {
    AffineTransform transform;
    cmaes::OptimResult opt;
};

/// Fits the affine transform by minimizing the transfer loss with
/// BIPOP-CMA-ES over the (v, z) encoding.
TransferResult tl_cmaes(const forest::ForestModel& source, const Dataset& transfer_set,
                        const TransferOptions& options, Rng& rng);

double transferred_predict(const forest::ForestModel& source, const AffineTransform& transform,
                           const Vector& x);
Vector transferred_predict_batch(const forest::ForestModel& source,
                                 const AffineTransform& transform, const Matrix& X);

/// Stores d, v and the so(d) coordinates (never W); W is rebuilt through the
/// exponential map on load, so predictions round-trip exactly.
void save_transform(const AffineTransform& transform, const std::string& path);
AffineTransform load_transform(const std::string& path);

} // namespace affinerf::transfer
