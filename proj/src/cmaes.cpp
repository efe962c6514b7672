#include "affinerf/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace affinerf::cmaes {

void SearchSpace::validate() const {
    if (lower.size() != upper.size() || lower.size() == 0)
        throw std::invalid_argument("search space: bound vectors must match and be nonempty");
    if (!lower.allFinite() || !upper.allFinite())
        throw std::invalid_argument("search space: bounds must be finite");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
        if (!(lower[i] < upper[i]))
            throw std::invalid_argument("search space: lower[" + std::to_string(i) +
                                        "] must be below upper[" + std::to_string(i) + "]");
}

Vector SearchSpace::clip(const Vector& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
}

bool SearchSpace::contains(const Vector& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::budget: return "budget";
    case StopReason::stagnation: return "stagnation";
    case StopReason::condition: return "condition";
    }
    return "unknown";
}

int default_lambda(int dim) {
    return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

long long default_run_budget(int dim, int lambda) {
    return 250LL * dim * lambda;
}

double CmaState::condition_number() const {
    if (!eigen_fresh || eigen_scale.size() == 0)
        return 1.0;
    const double lo = eigen_scale.minCoeff();
    const double hi = eigen_scale.maxCoeff();
    return (hi * hi) / (lo * lo);
}

CmaState cma_init(const SearchSpace& space, const Vector& x0, double sigma0, int lambda) {
    space.validate();
    if (x0.size() != space.lower.size())
        throw std::invalid_argument("cma_init: x0 dimension mismatch");
    if (!space.contains(x0))
        throw std::invalid_argument("cma_init: x0 out of bounds");
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
        throw std::invalid_argument("cma_init: sigma0 must be positive and finite");

    CmaState s;
    s.space = space;
    s.dim = space.dim();
    s.lambda = lambda > 0 ? lambda : default_lambda(s.dim);
    if (s.lambda < 2)
        throw std::invalid_argument("cma_init: lambda must be >= 2");

    const double n = s.dim;
    s.mu = s.lambda / 2;
    Vector w(s.mu);
    for (int i = 0; i < s.mu; ++i)
        w[i] = std::log(s.lambda / 2.0 + 0.5) - std::log(i + 1.0);
    w /= w.sum();
    s.weights = w;
    s.mu_eff = 1.0 / w.squaredNorm();

    s.c_sigma = (s.mu_eff + 2.0) / (n + s.mu_eff + 5.0);
    s.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (n + 1.0)) - 1.0) + s.c_sigma;
    s.c_c = (4.0 + s.mu_eff / n) / (n + 4.0 + 2.0 * s.mu_eff / n);
    s.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + s.mu_eff);
    s.c_mu = std::min(1.0 - s.c_1,
                      2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) / ((n + 2.0) * (n + 2.0) + s.mu_eff));
    s.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    s.mean = x0;
    s.sigma = sigma0;
    s.C = Matrix::Identity(s.dim, s.dim);
    s.p_sigma = Vector::Zero(s.dim);
    s.p_c = Vector::Zero(s.dim);
    return s;
}

namespace {

void refresh_eigen(CmaState& s) {
    if (s.eigen_fresh)
        return;
    if (!s.C.allFinite())
        throw CovarianceError("cma: covariance has non-finite entries");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s.C);
    if (solver.info() != Eigen::Success)
        throw CovarianceError("cma: covariance eigendecomposition failed");
    Vector ev = solver.eigenvalues();
    if (!ev.allFinite())
        throw CovarianceError("cma: covariance lost positive definiteness");
    if (!(ev.minCoeff() > 0.0)) {
        // eigenvalue underflow after long degenerate updates; lift the
        // spectrum just enough to stay factorizable
        const double top = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
        const double bump = -std::min(ev.minCoeff(), 0.0) +
                            std::max(1e-14 * top, std::numeric_limits<double>::min() * 1e16);
        s.C += bump * Matrix::Identity(s.dim, s.dim);
        solver.compute(s.C);
        ev = solver.eigenvalues();
        if (solver.info() != Eigen::Success || !ev.allFinite() || !(ev.minCoeff() > 0.0))
            throw CovarianceError("cma: covariance lost positive definiteness");
    }
    s.eigen_basis = solver.eigenvectors();
    s.eigen_scale = ev.cwiseSqrt();
    s.eigen_fresh = true;
}

} // namespace

std::vector<Vector> ask(CmaState& s, Rng& rng) {
    refresh_eigen(s);
    s.pending_raw.resize(s.dim, s.lambda);
    s.pending_repaired.resize(s.dim, s.lambda);
    Vector z(s.dim);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(s.lambda));
    for (int k = 0; k < s.lambda; ++k) {
        for (int i = 0; i < s.dim; ++i)
            z[i] = rng.normal();
        const Vector raw = s.mean + s.sigma * (s.eigen_basis * (s.eigen_scale.asDiagonal() * z));
        const Vector repaired = s.space.clip(raw);
        s.pending_raw.col(k) = raw;
        s.pending_repaired.col(k) = repaired;
        out.push_back(repaired);
    }
    s.has_pending = true;
    return out;
}

void tell(CmaState& s, const std::vector<Vector>& candidates,
          const std::vector<double>& fitnesses) {
    if (!s.has_pending)
        throw std::logic_error("cma tell: no pending population, call ask first");
    if (candidates.size() != static_cast<std::size_t>(s.lambda) ||
        fitnesses.size() != static_cast<std::size_t>(s.lambda))
        throw std::invalid_argument("cma tell: expected exactly lambda candidates and fitnesses");
    for (double f : fitnesses)
        if (!std::isfinite(f))
            throw std::invalid_argument("cma tell: fitness values must be finite");

    const double range = *std::max_element(fitnesses.begin(), fitnesses.end()) -
                         *std::min_element(fitnesses.begin(), fitnesses.end());
    s.penalty_scale = s.penalty_seen ? 0.9 * s.penalty_scale + 0.1 * range : range;
    s.penalty_seen = true;
    const double scale = s.penalty_scale > 0.0 ? s.penalty_scale : 1.0;

    std::vector<double> ranked_fitness(fitnesses.size());
    for (int k = 0; k < s.lambda; ++k) {
        const double dist2 = (s.pending_raw.col(k) - s.pending_repaired.col(k)).squaredNorm();
        ranked_fitness[static_cast<std::size_t>(k)] = fitnesses[static_cast<std::size_t>(k)] +
                                                      scale * dist2;
    }
    std::vector<int> order(static_cast<std::size_t>(s.lambda));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return ranked_fitness[static_cast<std::size_t>(a)] <
               ranked_fitness[static_cast<std::size_t>(b)];
    });

    refresh_eigen(s); // decomposition of the pre-update C, shared with ask
    const Matrix& B = s.eigen_basis;
    const Vector inv_scale = s.eigen_scale.cwiseInverse();

    const Vector old_mean = s.mean;
    Vector new_mean = Vector::Zero(s.dim);
    for (int i = 0; i < s.mu; ++i)
        new_mean += s.weights[i] * s.pending_raw.col(order[static_cast<std::size_t>(i)]);
    s.mean = new_mean;

    const Vector y_w = (s.mean - old_mean) / s.sigma;
    const Vector c_inv_sqrt_y = B * (inv_scale.asDiagonal() * (B.transpose() * y_w));

    s.p_sigma = (1.0 - s.c_sigma) * s.p_sigma +
                std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) * c_inv_sqrt_y;

    const double ps_norm = s.p_sigma.norm();
    const double expected = std::sqrt(
        1.0 - std::pow(1.0 - s.c_sigma, 2.0 * static_cast<double>(s.generation + 1)));
    const bool h_sigma = ps_norm / expected < (1.4 + 2.0 / (s.dim + 1.0)) * s.chi_n;

    s.p_c = (1.0 - s.c_c) * s.p_c;
    if (h_sigma)
        s.p_c += std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) * y_w;

    Matrix rank_mu = Matrix::Zero(s.dim, s.dim);
    for (int i = 0; i < s.mu; ++i) {
        const Vector y = (s.pending_raw.col(order[static_cast<std::size_t>(i)]) - old_mean) / s.sigma;
        rank_mu.noalias() += s.weights[i] * (y * y.transpose());
    }
    const double c1_correction = h_sigma ? 0.0 : s.c_c * (2.0 - s.c_c);
    s.C = (1.0 - s.c_1 - s.c_mu) * s.C +
          s.c_1 * (s.p_c * s.p_c.transpose() + c1_correction * s.C) +
          s.c_mu * rank_mu;
    s.C = 0.5 * (s.C + s.C.transpose().eval());

    // exponent clamp only matters once the state is already degenerate
    s.sigma *= std::exp(std::clamp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0), -1.0, 1.0));

    s.generation += 1;
    s.eigen_fresh = false;
    s.has_pending = false;
}

OptimResult cma_run(const Objective& objective, const SearchSpace& space, const Vector& x0,
                    double sigma0, const RunOptions& options, Rng& rng) {
    CmaState s = cma_init(space, x0, sigma0, options.lambda);
    if (options.budget < s.lambda)
        throw std::invalid_argument("cma_run: budget " + std::to_string(options.budget) +
                                    " is below the population size " + std::to_string(s.lambda));

    OptimResult result;
    result.best_f = std::numeric_limits<double>::infinity();
    result.reason = StopReason::budget;

    const long long window =
        10 + static_cast<long long>(std::ceil(30.0 * s.dim / static_cast<double>(s.lambda)));
    std::deque<double> history;

    while (result.evaluations + s.lambda <= options.budget) {
        std::vector<Vector> population;
        try {
            population = ask(s, rng);
        } catch (const CovarianceError&) {
            result.reason = StopReason::condition;
            break;
        }
        if (s.generation == 0) {
            const auto n_inject = std::min(options.first_generation_injections.size(),
                                           static_cast<std::size_t>(s.lambda));
            for (std::size_t k = 0; k < n_inject; ++k) {
                const Vector& cand = options.first_generation_injections[k];
                if (cand.size() != s.dim)
                    throw std::invalid_argument("cma_run: injected candidate dimension mismatch");
                s.pending_raw.col(static_cast<Eigen::Index>(k)) = cand;
                s.pending_repaired.col(static_cast<Eigen::Index>(k)) = space.clip(cand);
                population[k] = s.pending_repaired.col(static_cast<Eigen::Index>(k));
            }
        }

        std::vector<double> fitnesses(population.size());
        double gen_best = std::numeric_limits<double>::infinity();
        int gen_best_idx = 0;
        for (std::size_t k = 0; k < population.size(); ++k) {
            double f;
            try {
                f = objective(population[k]);
            } catch (const std::exception& e) {
                throw std::runtime_error("cma_run: objective failed after " +
                                         std::to_string(result.evaluations) +
                                         " evaluations: " + e.what());
            }
            ++result.evaluations;
            fitnesses[k] = f;
            if (f < gen_best) {
                gen_best = f;
                gen_best_idx = static_cast<int>(k);
            }
        }
        if (gen_best < result.best_f) {
            result.best_f = gen_best;
            result.best_x = population[static_cast<std::size_t>(gen_best_idx)];
        }

        tell(s, population, fitnesses);

        history.push_back(result.best_f);
        if (static_cast<long long>(history.size()) > window)
            history.pop_front();
        if (static_cast<long long>(history.size()) == window) {
            const auto [lo, hi] = std::minmax_element(history.begin(), history.end());
            if (*hi - *lo < options.f_tol) {
                result.reason = StopReason::stagnation;
                break;
            }
        }

        try {
            refresh_eigen(s);
        } catch (const CovarianceError&) {
            result.reason = StopReason::condition;
            break;
        }
        if (s.condition_number() > options.condition_cap) {
            result.reason = StopReason::condition;
            break;
        }
    }

    if (!result.best_x.size()) {
        // budget below one generation never gets here (guarded above), but a
        // first-ask covariance failure can; fall back to the start point
        result.best_x = space.clip(x0);
        result.best_f = objective(result.best_x);
        ++result.evaluations;
    }
    return result;
}

OptimResult bipop_run(const Objective& objective, const SearchSpace& space,
                      const InitSampler& init_sampler, double sigma0,
                      const BipopOptions& options, Rng& rng) {
    if (options.n_restarts < 0)
        throw std::invalid_argument("bipop_run: n_restarts must be >= 0");
    space.validate();

    const int lambda_base = options.lambda > 0 ? options.lambda : default_lambda(space.dim());
    long long remaining = options.total_budget;
    long long large_spend = 0;

    OptimResult best;
    best.best_f = std::numeric_limits<double>::infinity();
    best.reason = StopReason::budget;
    bool have_result = false;

    for (int run = 0; run <= options.n_restarts; ++run) {
        const bool large = run == 0 || run % 2 == 1;
        int lambda_run = lambda_base;
        double sigma_run = sigma0;
        if (run > 0 && large)
            lambda_run = lambda_base * (1 << ((run + 1) / 2));
        if (run > 0 && !large)
            sigma_run = sigma0 * std::pow(10.0, -2.0 * rng.uniform(0.0, 1.0));

        long long budget_run = std::min(remaining, default_run_budget(space.dim(), lambda_run));
        if (!large)
            budget_run = std::min(budget_run, std::max<long long>(lambda_run, large_spend / 2));
        if (budget_run < lambda_run)
            break;

        const Vector x0 = space.clip(init_sampler(rng));
        RunOptions run_options;
        run_options.budget = budget_run;
        run_options.f_tol = options.f_tol;
        run_options.lambda = lambda_run;
        run_options.condition_cap = options.condition_cap;
        if (run == 0)
            run_options.first_generation_injections = options.first_run_injections;

        const OptimResult r = cma_run(objective, space, x0, sigma_run, run_options, rng);
        remaining -= r.evaluations;
        if (large)
            large_spend += r.evaluations;
        if (run > 0)
            best.restarts_used += 1;
        best.evaluations += r.evaluations;
        if (!have_result || r.best_f < best.best_f) {
            best.best_f = r.best_f;
            best.best_x = r.best_x;
            best.reason = r.reason;
            have_result = true;
        }
    }

    if (!have_result)
        throw std::invalid_argument("bipop_run: total budget below one population");
    return best;
}

} // namespace affinerf::cmaes
