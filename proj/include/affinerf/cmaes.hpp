#pragma once

#include "affinerf/dataset.hpp"
#include "affinerf/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace affinerf::cmaes {

struct SearchSpace {
    Vector lower;
    Vector upper;

    int dim() const { return static_cast<int>(lower.size()); }
    void validate() const;
    Vector clip(const Vector& x) const;
    bool contains(const Vector& x) const;
};

/// Thrown when the covariance can no longer be factorized; a restart driver
/// treats it as the end of the current run.
struct CovarianceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// (mu/mu_w, lambda) strategy state with the usual tutorial constants.
struct CmaState {
    SearchSpace space;
    int dim = 0;
    int lambda = 0;
    int mu = 0;
    Vector weights; // mu entries, sum 1
    double mu_eff = 0.0;
    double c_sigma = 0.0, d_sigma = 0.0;
    double c_c = 0.0, c_1 = 0.0, c_mu = 0.0;
    double chi_n = 0.0;

    Vector mean;
    double sigma = 0.0;
    Matrix C;
    Vector p_sigma, p_c;
    long long generation = 0;

    // eigen cache of C, refreshed lazily before sampling
    Matrix eigen_basis;   // B
    Vector eigen_scale;   // sqrt of eigenvalues
    bool eigen_fresh = false;

    // pending population (raw = unclipped samples kept for the update)
    Matrix pending_raw;      // dim x lambda
    Matrix pending_repaired; // dim x lambda
    bool has_pending = false;

    // penalty scale tracks a running estimate of the fitness range
    double penalty_scale = 0.0;
    bool penalty_seen = false;

    double condition_number() const;
};

enum class StopReason { budget, stagnation, condition };
const char* to_string(StopReason r);

struct OptimResult {
    Vector best_x;
    double best_f = 0.0;
    long long evaluations = 0;
    int restarts_used = 0;
    StopReason reason = StopReason::budget;
};

/// lambda = 0 selects the default 4 + floor(3 ln dim).
CmaState cma_init(const SearchSpace& space, const Vector& x0, double sigma0, int lambda = 0);

/// Samples lambda candidates from N(mean, sigma^2 C) and returns their
/// bound-repaired images; the raw samples stay in the state for tell().
std::vector<Vector> ask(CmaState& state, Rng& rng);

/// Rank-one plus rank-mu update. Fitness ranking adds the repair penalty
/// |x_raw - x_repaired|^2 scaled by the running fitness-range estimate; ties
/// are broken by candidate index.
void tell(CmaState& state, const std::vector<Vector>& candidates,
          const std::vector<double>& fitnesses);

using Objective = std::function<double(const Vector&)>;

struct RunOptions {
    long long budget = 0;          // max objective evaluations, >= lambda
    double f_tol = 1e-12;          // stagnation range on per-generation bests
    int lambda = 0;                // 0 = default population size
    double condition_cap = 1e14;
    // Raw samples substituted into the first generation (e.g. a known-good
    // anchor candidate); each replaces one sampled candidate.
    std::vector<Vector> first_generation_injections;
};

OptimResult cma_run(const Objective& objective, const SearchSpace& space, const Vector& x0,
                    double sigma0, const RunOptions& options, Rng& rng);

using InitSampler = std::function<Vector(Rng&)>;

struct BipopOptions {
    long long total_budget = 0;
    int n_restarts = 3;
    double f_tol = 1e-12;
    int lambda = 0;
    double condition_cap = 1e14;
    std::vector<Vector> first_run_injections;
};

/// Restart schedule: run 0 and odd restarts use the large regime (population
/// doubled per large restart), even restarts rerun the base population with a
/// shrunk step size and a budget capped at half the large-regime spend.
OptimResult bipop_run(const Objective& objective, const SearchSpace& space,
                      const InitSampler& init_sampler, double sigma0,
                      const BipopOptions& options, Rng& rng);

/// Default per-run evaluation budget: 250 * dim * lambda.
long long default_run_budget(int dim, int lambda);

int default_lambda(int dim);

} // namespace affinerf::cmaes
