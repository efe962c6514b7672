#include "affinerf/csv.hpp"
#include "affinerf/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

// exit codes: 0 ok, 1 config/usage error, 2 runtime failure (partial outputs kept)
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

int cmd_run(const std::string& config_path, std::uint64_t* seed_override,
            const std::string& out_override, int* workers_override) {
    affinerf::runner::ExperimentConfig config;
    try {
        config = affinerf::runner::load_config(config_path);
        if (seed_override)
            config.seed = *seed_override;
        if (!out_override.empty())
            config.output_dir = out_override;
        if (workers_override)
            config.workers = *workers_override;
        config.validate();
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kConfigError;
    }

    try {
        const auto output = affinerf::runner::run_experiment(config);
        affinerf::runner::emit_results(output, config, config.output_dir);
        std::cout << "wrote " << output.records.size() << " records to " << config.output_dir
                  << '\n';
        if (!output.errors.empty()) {
            std::cerr << output.errors.size()
                      << " stage(s) failed; see errors.csv (partial outputs preserved)\n";
            return kRuntimeError;
        }
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kRuntimeError;
    }
}

int cmd_stats(const std::string& records_path, double alpha, const std::string& out_path) {
    try {
        const auto records = affinerf::runner::read_records(records_path);
        const auto cells = affinerf::runner::run_significance(records, alpha);
        const std::string text = affinerf::runner::format_significance(cells);
        if (out_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out)
                throw std::runtime_error("cannot open '" + out_path + "' for writing");
            out << text;
        }
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kRuntimeError;
    }
}

int cmd_ingest_check(const std::string& csv_path) {
    try {
        const auto data = affinerf::io::ingest_csv(csv_path);
        std::cout << csv_path << ": " << data.n() << " rows, dimension " << data.dim() << '\n';
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kRuntimeError;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-forest surrogate transfer under affine domain shift"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_override = 0;
    std::string out_override;
    int workers_override = 0;
    auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
    run->add_option("config", config_path, "config file path")->required();
    auto* seed_opt = run->add_option("--seed", seed_override, "override the base seed");
    run->add_option("--out", out_override, "override the output directory");
    auto* workers_opt = run->add_option("--workers", workers_override, "override the worker count");

    std::string records_path;
    double alpha = 0.05;
    std::string stats_out;
    auto* stats = app.add_subcommand("stats", "significance tests over an emitted records file");
    stats->add_option("records", records_path, "records.csv path")->required();
    stats->add_option("--alpha", alpha, "significance level (default 0.05)");
    stats->add_option("--out", stats_out, "write the table to a file instead of stdout");

    std::string csv_path;
    auto* ingest = app.add_subcommand("ingest-check", "validate a dataset CSV file");
    ingest->add_option("csv", csv_path, "CSV file path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    if (run->parsed())
        return cmd_run(config_path, seed_opt->count() ? &seed_override : nullptr, out_override,
                       workers_opt->count() ? &workers_override : nullptr);
    if (stats->parsed())
        return cmd_stats(records_path, alpha, stats_out);
    if (ingest->parsed())
        return cmd_ingest_check(csv_path);
    return kConfigError;
}
