#include "affinerf/forest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace affinerf::forest {

void ForestParams::validate() const {
    if (n_trees < 1)
        throw std::invalid_argument("forest params: n_trees must be >= 1");
    if (max_depth && *max_depth < 1)
        throw std::invalid_argument("forest params: max_depth must be >= 1 when set");
    if (min_samples_split < 2)
        throw std::invalid_argument("forest params: min_samples_split must be >= 2");
    if (min_samples_leaf < 1)
        throw std::invalid_argument("forest params: min_samples_leaf must be >= 1");
    if (!(max_features_fraction > 0.0) || max_features_fraction > 1.0)
        throw std::invalid_argument("forest params: max_features_fraction must be in (0, 1]");
}

namespace {

struct SplitCandidate {
    double sse = std::numeric_limits<double>::infinity();
    int feature = -1;
    double threshold = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, const Vector& y, const ForestParams& params, Rng rng)
        : X_(X), y_(y), params_(params), rng_(std::move(rng)),
          d_(static_cast<int>(X.cols())) {
        n_features_per_split_ =
            std::min(d_, static_cast<int>(std::ceil(params.max_features_fraction * d_)));
        all_features_.resize(d_);
        std::iota(all_features_.begin(), all_features_.end(), 0);
    }

    Tree build() {
        const auto n = static_cast<std::size_t>(X_.rows());
        indices_.resize(n);
        if (params_.bootstrap) {
            for (auto& idx : indices_)
                idx = static_cast<int>(rng_.below(n));
        } else {
            std::iota(indices_.begin(), indices_.end(), 0);
        }
        grow(0, indices_.size(), 0);
        return std::move(tree_);
    }

private:
    int add_node() {
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0.0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.value.push_back(0.0);
        return static_cast<int>(tree_.feature.size()) - 1;
    }

    // Grows the node covering indices_[lo, hi); returns its id.
    int grow(std::size_t lo, std::size_t hi, int depth) {
        const int node = add_node();
        const auto n = hi - lo;

        double sum = 0.0, min_y = y_[indices_[lo]], max_y = min_y;
        for (std::size_t i = lo; i < hi; ++i) {
            const double v = y_[indices_[i]];
            sum += v;
            min_y = std::min(min_y, v);
            max_y = std::max(max_y, v);
        }
        const double mean = sum / static_cast<double>(n);
        tree_.value[node] = mean;

        const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
        if (n < static_cast<std::size_t>(params_.min_samples_split) || depth_reached ||
            min_y == max_y)
            return node;

        double parent_sse = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double dy = y_[indices_[i]] - mean;
            parent_sse += dy * dy;
        }

        const SplitCandidate best = find_split(lo, hi, parent_sse);
        if (best.feature < 0)
            return node;

        const auto mid = partition(lo, hi, best);
        if (mid == lo || mid == hi) // threshold failed to separate; keep leaf
            return node;

        tree_.feature[node] = best.feature;
        tree_.threshold[node] = best.threshold;
        tree_.left[node] = grow(lo, mid, depth + 1);
        tree_.right[node] = grow(mid, hi, depth + 1);
        return node;
    }

    // Exact search over midpoints of consecutive sorted distinct values.
    // Strict improvement wins; exact ties keep the lowest feature index and
    // lowest threshold (features ascend and thresholds ascend in the scan).
    SplitCandidate find_split(std::size_t lo, std::size_t hi, double parent_sse) {
        const auto n = hi - lo;
        const int min_leaf = params_.min_samples_leaf;
        SplitCandidate best;
        best.sse = parent_sse;

        const auto& features = pick_features();
        sorted_.resize(n);
        for (int f : features) {
            for (std::size_t i = 0; i < n; ++i) {
                const int row = indices_[lo + i];
                sorted_[i] = {X_(row, f), y_[row]};
            }
            std::sort(sorted_.begin(), sorted_.end());

            double left_sum = 0.0, left_sq = 0.0;
            double total_sum = 0.0, total_sq = 0.0;
            for (const auto& [x, y] : sorted_) {
                total_sum += y;
                total_sq += y * y;
            }
            for (std::size_t i = 1; i < n; ++i) {
                const double yv = sorted_[i - 1].second;
                left_sum += yv;
                left_sq += yv * yv;
                if (sorted_[i].first == sorted_[i - 1].first)
                    continue;
                const auto n_left = static_cast<double>(i);
                const auto n_right = static_cast<double>(n - i);
                if (i < static_cast<std::size_t>(min_leaf) ||
                    n - i < static_cast<std::size_t>(min_leaf))
                    continue;
                const double right_sum = total_sum - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse = (left_sq - left_sum * left_sum / n_left) +
                                   (right_sq - right_sum * right_sum / n_right);
                if (sse < best.sse) {
                    best.sse = sse;
                    best.feature = f;
                    double thr = 0.5 * (sorted_[i - 1].first + sorted_[i].first);
                    if (!(thr < sorted_[i].first)) // midpoint rounded up to the right value
                        thr = sorted_[i - 1].first;
                    best.threshold = thr;
                }
            }
        }
        return best;
    }

    const std::vector<int>& pick_features() {
        if (n_features_per_split_ == d_)
            return all_features_;
        subset_ = all_features_;
        for (int i = 0; i < n_features_per_split_; ++i) {
            const auto j = i + static_cast<int>(rng_.below(subset_.size() - i));
            std::swap(subset_[i], subset_[j]);
        }
        subset_.resize(n_features_per_split_);
        std::sort(subset_.begin(), subset_.end());
        return subset_;
    }

    std::size_t partition(std::size_t lo, std::size_t hi, const SplitCandidate& split) {
        auto it = std::stable_partition(
            indices_.begin() + static_cast<std::ptrdiff_t>(lo),
            indices_.begin() + static_cast<std::ptrdiff_t>(hi),
            [&](int row) { return X_(row, split.feature) <= split.threshold; });
        return static_cast<std::size_t>(it - indices_.begin());
    }

    const Matrix& X_;
    const Vector& y_;
    const ForestParams& params_;
    Rng rng_;
    int d_;
    int n_features_per_split_;
    Tree tree_;
    std::vector<int> indices_;
    std::vector<int> all_features_;
    std::vector<int> subset_;
    std::vector<std::pair<double, double>> sorted_;
};

} // namespace

ForestModel fit_forest(const Dataset& data, const ForestParams& params, const Rng& rng) {
    params.validate();
    data.validate();
    if (data.n() < 2)
        throw std::invalid_argument("fit_forest: need at least 2 samples, received " +
                                    std::to_string(data.n()));
    if (data.dim() < 1)
        throw std::invalid_argument("fit_forest: need at least one feature");

    ForestModel model;
    model.params = params;
    model.dim = static_cast<int>(data.dim());
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        TreeBuilder builder(data.X, data.y, params, rng.fork(static_cast<std::uint64_t>(t)));
        model.trees.push_back(builder.build());
    }
    return model;
}

double ForestModel::predict(const Vector& x) const {
    if (!fitted())
        throw std::logic_error("forest predict: model is not fitted");
    if (x.size() != dim)
        throw std::invalid_argument("forest predict: expected dimension " + std::to_string(dim) +
                                    ", received " + std::to_string(x.size()));
    double acc = 0.0;
    for (const Tree& t : trees)
        acc += t.predict(x.data());
    return acc / static_cast<double>(trees.size());
}

Vector ForestModel::predict_batch(const Matrix& X) const {
    if (!fitted())
        throw std::logic_error("forest predict: model is not fitted");
    if (X.cols() != dim && X.rows() != 0)
        throw std::invalid_argument("forest predict: expected dimension " + std::to_string(dim) +
                                    ", received " + std::to_string(X.cols()));
    Vector out = Vector::Zero(X.rows());
    Eigen::RowVectorXd row(dim);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        row = X.row(i);
        double acc = 0.0;
        for (const Tree& t : trees)
            acc += t.predict(row.data());
        out[i] = acc / static_cast<double>(trees.size());
    }
    return out;
}

namespace {

constexpr const char* kFormatTag = "affinerf.forest";
constexpr int kFormatVersion = 1;

} // namespace

void save_model(const ForestModel& model, const std::string& path) {
    if (!model.fitted())
        throw std::invalid_argument("save_model: refusing to save an unfitted model");
    nlohmann::json j;
    j["format"] = kFormatTag;
    j["version"] = kFormatVersion;
    j["dim"] = model.dim;
    j["params"] = {{"n_trees", model.params.n_trees},
                   {"max_depth", model.params.max_depth ? nlohmann::json(*model.params.max_depth)
                                                        : nlohmann::json(nullptr)},
                   {"min_samples_split", model.params.min_samples_split},
                   {"min_samples_leaf", model.params.min_samples_leaf},
                   {"max_features_fraction", model.params.max_features_fraction},
                   {"bootstrap", model.params.bootstrap}};
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& t : model.trees) {
        trees.push_back({{"feature", t.feature},
                         {"threshold", t.threshold},
                         {"left", t.left},
                         {"right", t.right},
                         {"value", t.value}});
    }
    j["trees"] = std::move(trees);

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("save_model: cannot open '" + path + "' for writing");
    out << j.dump();
    if (!out)
        throw std::runtime_error("save_model: write to '" + path + "' failed");
}

ForestModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("load_model: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_model: malformed file '" + path + "': " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormatTag)
            throw std::runtime_error("unrecognized format tag");
        if (j.at("version").get<int>() != kFormatVersion)
            throw std::runtime_error("unsupported format version");
        ForestModel model;
        model.dim = j.at("dim").get<int>();
        const auto& p = j.at("params");
        model.params.n_trees = p.at("n_trees").get<int>();
        if (!p.at("max_depth").is_null())
            model.params.max_depth = p.at("max_depth").get<int>();
        model.params.min_samples_split = p.at("min_samples_split").get<int>();
        model.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
        model.params.max_features_fraction = p.at("max_features_fraction").get<double>();
        model.params.bootstrap = p.at("bootstrap").get<bool>();
        for (const auto& tj : j.at("trees")) {
            Tree t;
            t.feature = tj.at("feature").get<std::vector<int>>();
            t.threshold = tj.at("threshold").get<std::vector<double>>();
            t.left = tj.at("left").get<std::vector<int>>();
            t.right = tj.at("right").get<std::vector<int>>();
            t.value = tj.at("value").get<std::vector<double>>();
            const auto n = t.feature.size();
            if (t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
                t.value.size() != n || n == 0)
                throw std::runtime_error("inconsistent tree arrays");
            for (std::size_t i = 0; i < n; ++i) {
                if (t.feature[i] >= model.dim)
                    throw std::runtime_error("split feature out of range");
                if (t.feature[i] >= 0 &&
                    (t.left[i] < 0 || t.right[i] < 0 ||
                     t.left[i] >= static_cast<int>(n) || t.right[i] >= static_cast<int>(n)))
                    throw std::runtime_error("child index out of range");
                if (!std::isfinite(t.value[i]))
                    throw std::runtime_error("non-finite leaf value");
            }
            model.trees.push_back(std::move(t));
        }
        if (!model.fitted())
            throw std::runtime_error("model holds no trees");
        model.params.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_model: malformed file '" + path + "': " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error("load_model: malformed file '" + path + "': " + e.what());
    }
}

} // namespace affinerf::forest
