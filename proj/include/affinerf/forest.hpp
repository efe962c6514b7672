#pragma once

#include "affinerf/dataset.hpp"
#include "affinerf/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace affinerf::forest {

struct ForestParams {
    int n_trees = 100;
    std::optional<int> max_depth; // empty = unbounded
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    double max_features_fraction = 1.0; // fraction of features drawn per split
    bool bootstrap = true;

    void validate() const;
};

/// One CART regression tree in flat-array form. Internal nodes have
/// feature >= 0 and route x[feature] <= threshold to left; leaves have
/// feature = -1 and carry the node mean in value.
struct Tree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    double predict(const double* x) const {
        int node = 0;
        while (feature[node] >= 0)
            node = x[feature[node]] <= threshold[node] ? left[node] : right[node];
        return value[node];
    }
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestParams params;
    int dim = 0;

    bool fitted() const { return !trees.empty(); }
    double predict(const Vector& x) const;
    Vector predict_batch(const Matrix& X) const;
};

/// Bagged CART regression. Tree t is grown from the child stream rng.fork(t),
/// so the result is independent of any parallel scheduling.
ForestModel fit_forest(const Dataset& data, const ForestParams& params, const Rng& rng);

/// Versioned JSON container; stored leaf values round-trip bit-exact.
void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

} // namespace affinerf::forest
