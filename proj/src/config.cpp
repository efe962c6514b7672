#include "affinerf/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace affinerf::runner {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("config error: " + msg);
}

void expect_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object())
        fail(where + " must be an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            fail("unknown key '" + item.key() + "' in " + where);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key))
        return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail("key '" + key + "' has the wrong type");
    }
}

} // namespace

void ExperimentConfig::validate() const {
    if (mode == Mode::synthetic) {
        if (synthetic.functions.empty())
            fail("synthetic.functions must not be empty");
        if (synthetic.dimensions.empty())
            fail("synthetic.dimensions must not be empty");
        for (int d : synthetic.dimensions)
            if (d < 2)
                fail("synthetic.dimensions entries must be >= 2");
        if (synthetic.train_points_per_dim < 1)
            fail("synthetic.train_points_per_dim must be >= 1");
    } else {
        if (csv.source_path.empty() || csv.target_path.empty())
            fail("csv mode requires source_path and target_path");
        if (!std::filesystem::exists(csv.source_path))
            fail("csv source file '" + csv.source_path + "' does not exist");
        if (!std::filesystem::exists(csv.target_path))
            fail("csv target file '" + csv.target_path + "' does not exist");
        if (log_transform.enabled)
            fail("the log transform applies to the synthetic pipeline only");
    }
    if (transfer_sizes.empty())
        fail("transfer_sizes must not be empty");
    for (std::size_t i = 0; i < transfer_sizes.size(); ++i) {
        if (transfer_sizes[i] < 1)
            fail("transfer_sizes entries must be >= 1");
        if (i > 0 && transfer_sizes[i] <= transfer_sizes[i - 1])
            fail("transfer_sizes must be strictly increasing");
    }
    if (repetitions < 1)
        fail("repetitions must be >= 1");
    if (optimizer.budget < 2)
        fail("optimizer.budget must be >= 2");
    if (optimizer.restarts < 0)
        fail("optimizer.restarts must be >= 0");
    if (log_transform.enabled && !(log_transform.epsilon > 0.0))
        fail("log_transform.epsilon must be positive");
    if (workers < 1)
        fail("workers must be >= 1");
    try {
        forest.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (output_dir.empty())
        fail("output_dir must not be empty");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }

    expect_keys(j, "the top level",
                {"mode", "synthetic", "csv", "transfer_sizes", "repetitions", "seed", "forest",
                 "optimizer", "log_transform", "output_dir", "workers", "record_timing"});

    ExperimentConfig cfg;
    const std::string mode = get_or<std::string>(j, "mode", "synthetic");
    if (mode == "synthetic")
        cfg.mode = ExperimentConfig::Mode::synthetic;
    else if (mode == "csv")
        cfg.mode = ExperimentConfig::Mode::csv;
    else
        fail("mode must be 'synthetic' or 'csv'");

    if (j.contains("synthetic")) {
        const json& s = j.at("synthetic");
        expect_keys(s, "synthetic", {"functions", "dimensions", "train_points_per_dim"});
        for (const auto& name : get_or<std::vector<std::string>>(s, "functions", {})) {
            try {
                cfg.synthetic.functions.push_back(bench::function_from_string(name));
            } catch (const std::invalid_argument& e) {
                fail(e.what());
            }
        }
        cfg.synthetic.dimensions = get_or<std::vector<int>>(s, "dimensions", {});
        cfg.synthetic.train_points_per_dim =
            get_or<int>(s, "train_points_per_dim", cfg.synthetic.train_points_per_dim);
    }

    if (j.contains("csv")) {
        const json& c = j.at("csv");
        expect_keys(c, "csv", {"source_path", "target_path", "exclude_transfer_from_test"});
        cfg.csv.source_path = get_or<std::string>(c, "source_path", "");
        cfg.csv.target_path = get_or<std::string>(c, "target_path", "");
        cfg.csv.exclude_transfer_from_test =
            get_or<bool>(c, "exclude_transfer_from_test", false);
    }

    cfg.transfer_sizes = get_or<std::vector<int>>(j, "transfer_sizes", {});
    cfg.repetitions = get_or<int>(j, "repetitions", cfg.repetitions);
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);

    if (j.contains("forest")) {
        const json& f = j.at("forest");
        expect_keys(f, "forest",
                    {"n_trees", "max_depth", "min_samples_split", "min_samples_leaf",
                     "max_features_fraction", "bootstrap"});
        cfg.forest.n_trees = get_or<int>(f, "n_trees", cfg.forest.n_trees);
        if (f.contains("max_depth") && !f.at("max_depth").is_null())
            cfg.forest.max_depth = get_or<int>(f, "max_depth", 0);
        cfg.forest.min_samples_split =
            get_or<int>(f, "min_samples_split", cfg.forest.min_samples_split);
        cfg.forest.min_samples_leaf =
            get_or<int>(f, "min_samples_leaf", cfg.forest.min_samples_leaf);
        cfg.forest.max_features_fraction =
            get_or<double>(f, "max_features_fraction", cfg.forest.max_features_fraction);
        cfg.forest.bootstrap = get_or<bool>(f, "bootstrap", cfg.forest.bootstrap);
    }

    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        expect_keys(o, "optimizer",
                    {"budget", "restarts", "f_tol", "lambda", "sigma0", "inject_identity"});
        cfg.optimizer.budget = get_or<long long>(o, "budget", cfg.optimizer.budget);
        cfg.optimizer.restarts = get_or<int>(o, "restarts", cfg.optimizer.restarts);
        cfg.optimizer.f_tol = get_or<double>(o, "f_tol", cfg.optimizer.f_tol);
        cfg.optimizer.lambda = get_or<int>(o, "lambda", cfg.optimizer.lambda);
        cfg.optimizer.sigma0 = get_or<double>(o, "sigma0", cfg.optimizer.sigma0);
        cfg.optimizer.inject_identity =
            get_or<bool>(o, "inject_identity", cfg.optimizer.inject_identity);
    }

    if (j.contains("log_transform")) {
        const json& l = j.at("log_transform");
        expect_keys(l, "log_transform", {"enabled", "epsilon"});
        cfg.log_transform.enabled = get_or<bool>(l, "enabled", cfg.log_transform.enabled);
        cfg.log_transform.epsilon = get_or<double>(l, "epsilon", cfg.log_transform.epsilon);
    } else if (cfg.mode == ExperimentConfig::Mode::csv) {
        cfg.log_transform.enabled = false;
    }

    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.workers = get_or<int>(j, "workers", cfg.workers);
    cfg.record_timing = get_or<bool>(j, "record_timing", cfg.record_timing);

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

} // namespace affinerf::runner
