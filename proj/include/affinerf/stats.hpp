#pragma once

#include "affinerf/dataset.hpp"

#include <vector>

namespace affinerf::stats {

/// Symmetric mean absolute percentage error in [0, 1]:
/// (1/n) sum |yhat - y| / (|yhat| + |y|), a term counting as 0 when both
/// values are exactly zero.
double smape(const Vector& y_true, const Vector& y_pred);

struct KwResult {
    double h; // tie-corrected statistic
    double p; // chi-square survival, k-1 degrees of freedom
};

/// Kruskal-Wallis omnibus test with midrank ties. All values identical is
/// reported as H = 0, p = 1.
KwResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct PairwiseComparison {
    int a = 0;
    int b = 0;
    double z = 0.0;
    double p_adjusted = 1.0; // two-sided, Bonferroni over the pairwise family
    bool significant = false;
    int better = -1; // group with the lower mean rank; -1 when not significant
};

/// Dunn's post-hoc comparison on mean ranks with tie correction. Lower rank
/// means a better (smaller) value.
std::vector<PairwiseComparison> dunn_posthoc(const std::vector<std::vector<double>>& groups,
                                             double alpha);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation (n-1), 0 when n = 1
    int n = 0;
};

Summary summarize(const std::vector<double>& values);

/// 100 * (scratch mean - transferred mean); positive means transfer is better.
double smape_diff_percent(double scratch_mean, double transferred_mean);

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Chi-square survival function.
double chi2_sf(double x, int df);

/// Standard normal survival function.
double normal_sf(double z);

} // namespace affinerf::stats
