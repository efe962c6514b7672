#pragma once

#include "affinerf/config.hpp"
#include "affinerf/stats.hpp"

#include <optional>
#include <string>
#include <vector>

namespace affinerf::runner {

enum class Variant { original, scratch, transferred };
const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// One evaluated model. Original-model rows carry size 0: the original does
/// not depend on the transfer size and is recorded once per repetition.
struct ResultRecord {
    std::string function;
    int dim = 0;
    int size = 0;
    int rep = 0;
    Variant variant = Variant::original;
    double smape = 0.0;
    std::optional<double> opt_loss; // transferred rows only
    long long wall_ms = 0;
};

struct RunError {
    std::string function;
    int dim = 0;
    int size = 0;
    int rep = 0;
    std::string stage;
    std::string message;
};

struct RunOutput {
    std::vector<ResultRecord> records;
    std::vector<RunError> errors;
};

/// Full pipeline: per (function, dimension, repetition) train the source
/// model, then per transfer size fit the transferred and scratch models on
/// the same transfer sample and score all three variants on a fresh test set.
/// Stage failures become error entries and the run continues.
RunOutput run_experiment(const ExperimentConfig& config);

/// Writes records.csv, summary.csv, heatmap.csv and curves.csv (and
/// errors.csv when errors occurred) into out_dir. Output is deterministic:
/// identical inputs produce identical bytes.
void emit_results(const RunOutput& output, const ExperimentConfig& config,
                  const std::string& out_dir);

std::vector<ResultRecord> read_records(const std::string& path);

struct CellSignificance {
    std::string function;
    int dim = 0;
    int size = 0;
    bool conclusive = false; // needs >= 2 repetitions per variant
    double kw_h = 0.0;
    double kw_p = 1.0;
    // "better"/"worse"/"ns" from the transferred model's point of view
    std::string transferred_vs_original = "ns";
    std::string transferred_vs_scratch = "ns";
};

/// Kruskal-Wallis omnibus gate followed by Dunn pairwise comparisons at
/// alpha, per (function, dimension, size) cell.
std::vector<CellSignificance> run_significance(const std::vector<ResultRecord>& records,
                                               double alpha);

std::string format_significance(const std::vector<CellSignificance>& cells);

} // namespace affinerf::runner
