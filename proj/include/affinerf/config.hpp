#pragma once

#include "affinerf/bench.hpp"
#include "affinerf/forest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace affinerf::runner {

struct OptimizerConfig {
    long long budget = 10000;
    int restarts = 3;
    double f_tol = 1e-12;
    int lambda = 0; // 0 = default population size
    double sigma0 = 0.0; // 0 = one-fifth of the average coordinate range
    bool inject_identity = true;
};

struct LogTransformConfig {
    bool enabled = true;
    double epsilon = 1e-12;
};

struct SyntheticConfig {
    std::vector<bench::FunctionId> functions;
    std::vector<int> dimensions;
    int train_points_per_dim = 1000; // source and test set sizes are this * d
};

struct CsvConfig {
    std::string source_path;
    std::string target_path;
    bool exclude_transfer_from_test = false;
};

struct ExperimentConfig {
    enum class Mode { synthetic, csv };

    Mode mode = Mode::synthetic;
    SyntheticConfig synthetic;
    CsvConfig csv;
    std::vector<int> transfer_sizes;
    int repetitions = 10;
    std::uint64_t seed = 0;
    forest::ForestParams forest;
    OptimizerConfig optimizer;
    LogTransformConfig log_transform;
    std::string output_dir = "results";
    int workers = 1;
    bool record_timing = true;

    void validate() const;
};

/// Strict JSON loader: unknown keys anywhere in the document are errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

} // namespace affinerf::runner
