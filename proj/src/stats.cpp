#include "affinerf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace affinerf::stats {

double smape(const Vector& y_true, const Vector& y_pred) {
    if (y_true.size() != y_pred.size())
        throw std::invalid_argument("smape: length mismatch (" + std::to_string(y_true.size()) +
                                    " vs " + std::to_string(y_pred.size()) + ")");
    if (y_true.size() == 0)
        throw std::invalid_argument("smape: empty input");
    if (!y_true.allFinite() || !y_pred.allFinite())
        throw std::runtime_error("smape: non-finite input");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        const double denom = std::abs(y_true[i]) + std::abs(y_pred[i]);
        if (denom > 0.0)
            acc += std::abs(y_pred[i] - y_true[i]) / denom;
    }
    return acc / static_cast<double>(y_true.size());
}

namespace {

struct RankedData {
    std::vector<double> rank_sum;   // per group
    std::vector<std::size_t> sizes; // per group
    std::size_t total = 0;
    double tie_sum = 0.0; // sum of t^3 - t over tie groups
    bool all_tied = false;
};

RankedData midranks(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2)
        throw std::invalid_argument("rank test: need at least two groups");
    std::vector<std::pair<double, std::size_t>> pooled; // value, group
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty())
            throw std::invalid_argument("rank test: group " + std::to_string(g) + " is empty");
        for (double v : groups[g]) {
            if (!std::isfinite(v))
                throw std::runtime_error("rank test: non-finite value");
            pooled.emplace_back(v, g);
        }
    }
    if (pooled.size() < 3)
        throw std::invalid_argument("rank test: need at least three values in total");
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    RankedData r;
    r.rank_sum.assign(groups.size(), 0.0);
    r.sizes.resize(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g)
        r.sizes[g] = groups[g].size();
    r.total = pooled.size();

    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first)
            ++j;
        const double t = static_cast<double>(j - i);
        const double rank = 0.5 * static_cast<double>(i + 1 + j); // midrank of [i+1 .. j]
        for (std::size_t k = i; k < j; ++k)
            r.rank_sum[pooled[k].second] += rank;
        if (t > 1.0)
            r.tie_sum += t * t * t - t;
        i = j;
    }
    r.all_tied = pooled.front().first == pooled.back().first;
    return r;
}

} // namespace

KwResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    const RankedData r = midranks(groups);
    if (r.all_tied)
        return {0.0, 1.0};
    const double n = static_cast<double>(r.total);
    double h = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g)
        h += r.rank_sum[g] * r.rank_sum[g] / static_cast<double>(r.sizes[g]);
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    const double correction = 1.0 - r.tie_sum / (n * n * n - n);
    h /= correction;
    const int df = static_cast<int>(groups.size()) - 1;
    return {h, chi2_sf(h, df)};
}

std::vector<PairwiseComparison> dunn_posthoc(const std::vector<std::vector<double>>& groups,
                                             double alpha) {
    const RankedData r = midranks(groups);
    const double n = static_cast<double>(r.total);
    const std::size_t k = groups.size();
    const double m = static_cast<double>(k * (k - 1) / 2);
    // rank variance with tie correction
    const double var = n * (n + 1.0) / 12.0 - r.tie_sum / (12.0 * (n - 1.0));

    std::vector<PairwiseComparison> out;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            PairwiseComparison c;
            c.a = static_cast<int>(a);
            c.b = static_cast<int>(b);
            const double mean_a = r.rank_sum[a] / static_cast<double>(r.sizes[a]);
            const double mean_b = r.rank_sum[b] / static_cast<double>(r.sizes[b]);
            const double se2 = var * (1.0 / static_cast<double>(r.sizes[a]) +
                                      1.0 / static_cast<double>(r.sizes[b]));
            if (se2 <= 0.0 || mean_a == mean_b) {
                c.z = 0.0;
                c.p_adjusted = 1.0;
            } else {
                c.z = (mean_a - mean_b) / std::sqrt(se2);
                c.p_adjusted = std::min(1.0, 2.0 * normal_sf(std::abs(c.z)) * m);
            }
            c.significant = c.p_adjusted <= alpha;
            if (c.significant)
                c.better = mean_a < mean_b ? c.a : c.b;
            out.push_back(c);
        }
    }
    return out;
}

Summary summarize(const std::vector<double>& values) {
    if (values.empty())
        throw std::invalid_argument("summarize: empty input");
    Summary s;
    s.n = static_cast<int>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.n;
    if (s.n > 1) {
        double acc = 0.0;
        for (double v : values)
            acc += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(acc / (s.n - 1));
    }
    return s;
}

double smape_diff_percent(double scratch_mean, double transferred_mean) {
    return 100.0 * (scratch_mean - transferred_mean);
}

namespace {

// Lower regularized incomplete gamma by series expansion.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16)
            break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma by Lentz continued fraction.
double gamma_q_contfrac(double a, double x) {
    const double tiny = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16)
            break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0)
        throw std::invalid_argument("gamma_q: requires a > 0 and x >= 0");
    if (x == 0.0)
        return 1.0;
    if (x < a + 1.0)
        return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi2_sf(double x, int df) {
    if (df < 1)
        throw std::invalid_argument("chi2_sf: df must be >= 1");
    if (x <= 0.0)
        return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace affinerf::stats
