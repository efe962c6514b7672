#include "affinerf/runner.hpp"

#include "affinerf/csv.hpp"
#include "affinerf/transfer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <atomic>
#include <thread>

namespace affinerf::runner {

const char* to_string(Variant v) {
    switch (v) {
    case Variant::original: return "original";
    case Variant::scratch: return "scratch";
    case Variant::transferred: return "transferred";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& s) {
    if (s == "original") return Variant::original;
    if (s == "scratch") return Variant::scratch;
    if (s == "transferred") return Variant::transferred;
    throw std::invalid_argument("unknown variant '" + s + "'");
}

namespace {

namespace stream {
constexpr std::uint64_t instance = 1;
constexpr std::uint64_t source_sample = 2;
constexpr std::uint64_t source_fit = 3;
constexpr std::uint64_t test_sample = 4;
constexpr std::uint64_t transfer_sample = 5;
constexpr std::uint64_t scratch_fit = 6;
constexpr std::uint64_t optimizer = 7;
} // namespace stream

// Independent stream per (function, dimension, repetition, stage[, size]).
Rng derive_stream(const ExperimentConfig& cfg, std::uint64_t fn_tag, int dim, int rep,
                  std::uint64_t stage, int size = 0) {
    std::uint64_t h = cfg.seed;
    h = mix_seed(h, fn_tag);
    h = mix_seed(h, static_cast<std::uint64_t>(dim));
    h = mix_seed(h, static_cast<std::uint64_t>(rep));
    h = mix_seed(h, stage);
    h = mix_seed(h, static_cast<std::uint64_t>(size));
    return Rng(h);
}

struct Cell {
    std::string function; // name in the records
    std::uint64_t fn_tag = 0;
    bench::FunctionId fid = bench::FunctionId::sphere;
    int dim = 0;
    int rep = 0;
};

struct CellOutput {
    std::vector<ResultRecord> records;
    std::vector<RunError> errors;
};

long long elapsed_ms(const std::chrono::steady_clock::time_point& start, bool enabled) {
    if (!enabled)
        return 0;
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 start)
        .count();
}

CellOutput run_synthetic_cell(const ExperimentConfig& cfg, const Cell& cell) {
    CellOutput out;
    const int d = cell.dim;
    const bool log_on = cfg.log_transform.enabled;
    const double eps = cfg.log_transform.epsilon;
    const int n_train = cfg.synthetic.train_points_per_dim * d;

    forest::ForestModel source_model;
    Dataset test_set;
    bench::TransferInstance instance;
    const auto source_start = std::chrono::steady_clock::now();
    try {
        Rng instance_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::instance);
        instance = bench::make_instance(cell.fid, d, instance_rng.seed());

        Rng sample_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::source_sample);
        const Matrix train_X = bench::sample_uniform(n_train, d, instance.lo, instance.hi, sample_rng);
        const Dataset train_set = bench::build_dataset(instance.source_fn(), train_X, log_on, eps);

        Rng fit_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::source_fit);
        source_model = forest::fit_forest(train_set, cfg.forest, fit_rng);

        Rng test_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::test_sample);
        const Matrix test_X = bench::sample_uniform(n_train, d, instance.lo, instance.hi, test_rng);
        test_set = bench::build_dataset(instance.target_fn(), test_X, log_on, eps);

        ResultRecord original;
        original.function = cell.function;
        original.dim = d;
        original.size = 0;
        original.rep = cell.rep;
        original.variant = Variant::original;
        original.smape = stats::smape(test_set.y, source_model.predict_batch(test_set.X));
        original.wall_ms = elapsed_ms(source_start, cfg.record_timing);
        out.records.push_back(std::move(original));
    } catch (const std::exception& e) {
        out.errors.push_back({cell.function, d, 0, cell.rep, "source", e.what()});
        return out; // nothing downstream can run without the source model
    }

    for (int size : cfg.transfer_sizes) {
        Dataset transfer_set;
        try {
            Rng transfer_rng =
                derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::transfer_sample, size);
            const Matrix transfer_X =
                bench::sample_uniform(size, d, instance.lo, instance.hi, transfer_rng);
            transfer_set = bench::build_dataset(instance.target_fn(), transfer_X, log_on, eps);
        } catch (const std::exception& e) {
            out.errors.push_back({cell.function, d, size, cell.rep, "transfer_sample", e.what()});
            continue;
        }

        try {
            const auto start = std::chrono::steady_clock::now();
            Rng fit_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::scratch_fit, size);
            const forest::ForestModel scratch =
                forest::fit_forest(transfer_set, cfg.forest, fit_rng);
            ResultRecord rec;
            rec.function = cell.function;
            rec.dim = d;
            rec.size = size;
            rec.rep = cell.rep;
            rec.variant = Variant::scratch;
            rec.smape = stats::smape(test_set.y, scratch.predict_batch(test_set.X));
            rec.wall_ms = elapsed_ms(start, cfg.record_timing);
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            out.errors.push_back({cell.function, d, size, cell.rep, "scratch", e.what()});
        }

        try {
            const auto start = std::chrono::steady_clock::now();
            transfer::TransferOptions options;
            options.budget = cfg.optimizer.budget;
            options.restarts = cfg.optimizer.restarts;
            options.f_tol = cfg.optimizer.f_tol;
            options.lambda = cfg.optimizer.lambda;
            options.sigma0 = cfg.optimizer.sigma0;
            options.inject_identity = cfg.optimizer.inject_identity;
            Rng opt_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::optimizer, size);
            const transfer::TransferResult result =
                transfer::tl_cmaes(source_model, transfer_set, options, opt_rng);
            ResultRecord rec;
            rec.function = cell.function;
            rec.dim = d;
            rec.size = size;
            rec.rep = cell.rep;
            rec.variant = Variant::transferred;
            rec.smape = stats::smape(
                test_set.y,
                transfer::transferred_predict_batch(source_model, result.transform, test_set.X));
            rec.opt_loss = result.opt.best_f;
            rec.wall_ms = elapsed_ms(start, cfg.record_timing);
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            out.errors.push_back({cell.function, d, size, cell.rep, "transfer", e.what()});
        }
    }
    return out;
}

CellOutput run_csv_cell(const ExperimentConfig& cfg, const Cell& cell, const Dataset& source_set,
                        const Dataset& target_set) {
    CellOutput out;
    const int d = static_cast<int>(source_set.dim());

    forest::ForestModel source_model;
    const auto source_start = std::chrono::steady_clock::now();
    try {
        Rng fit_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::source_fit);
        source_model = forest::fit_forest(source_set, cfg.forest, fit_rng);

        ResultRecord original;
        original.function = cell.function;
        original.dim = d;
        original.size = 0;
        original.rep = cell.rep;
        original.variant = Variant::original;
        original.smape = stats::smape(target_set.y, source_model.predict_batch(target_set.X));
        original.wall_ms = elapsed_ms(source_start, cfg.record_timing);
        out.records.push_back(std::move(original));
    } catch (const std::exception& e) {
        out.errors.push_back({cell.function, d, 0, cell.rep, "source", e.what()});
        return out;
    }

    for (int size : cfg.transfer_sizes) {
        Dataset transfer_set;
        Dataset test_set = target_set;
        try {
            if (size > target_set.n())
                throw std::invalid_argument("transfer size " + std::to_string(size) +
                                            " exceeds the target dataset (" +
                                            std::to_string(target_set.n()) + " rows)");
            Rng transfer_rng =
                derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::transfer_sample, size);
            const auto idx = io::subsample_indices(target_set.n(), size, transfer_rng);
            transfer_set.X.resize(size, d);
            transfer_set.y.resize(size);
            for (int i = 0; i < size; ++i) {
                transfer_set.X.row(i) = target_set.X.row(idx[static_cast<std::size_t>(i)]);
                transfer_set.y[i] = target_set.y[idx[static_cast<std::size_t>(i)]];
            }
            if (cfg.csv.exclude_transfer_from_test) {
                std::vector<bool> excluded(static_cast<std::size_t>(target_set.n()), false);
                for (Eigen::Index row : idx)
                    excluded[static_cast<std::size_t>(row)] = true;
                const auto kept = target_set.n() - size;
                if (kept < 1)
                    throw std::invalid_argument("no test rows left after excluding the transfer set");
                test_set.X.resize(kept, d);
                test_set.y.resize(kept);
                Eigen::Index w = 0;
                for (Eigen::Index r = 0; r < target_set.n(); ++r) {
                    if (excluded[static_cast<std::size_t>(r)])
                        continue;
                    test_set.X.row(w) = target_set.X.row(r);
                    test_set.y[w] = target_set.y[r];
                    ++w;
                }
            }
        } catch (const std::exception& e) {
            out.errors.push_back({cell.function, d, size, cell.rep, "transfer_sample", e.what()});
            continue;
        }

        try {
            const auto start = std::chrono::steady_clock::now();
            Rng fit_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::scratch_fit, size);
            const forest::ForestModel scratch =
                forest::fit_forest(transfer_set, cfg.forest, fit_rng);
            ResultRecord rec;
            rec.function = cell.function;
            rec.dim = d;
            rec.size = size;
            rec.rep = cell.rep;
            rec.variant = Variant::scratch;
            rec.smape = stats::smape(test_set.y, scratch.predict_batch(test_set.X));
            rec.wall_ms = elapsed_ms(start, cfg.record_timing);
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            out.errors.push_back({cell.function, d, size, cell.rep, "scratch", e.what()});
        }

        try {
            const auto start = std::chrono::steady_clock::now();
            transfer::TransferOptions options;
            options.budget = cfg.optimizer.budget;
            options.restarts = cfg.optimizer.restarts;
            options.f_tol = cfg.optimizer.f_tol;
            options.lambda = cfg.optimizer.lambda;
            options.sigma0 = cfg.optimizer.sigma0;
            options.inject_identity = cfg.optimizer.inject_identity;
            Rng opt_rng = derive_stream(cfg, cell.fn_tag, d, cell.rep, stream::optimizer, size);
            const transfer::TransferResult result =
                transfer::tl_cmaes(source_model, transfer_set, options, opt_rng);
            ResultRecord rec;
            rec.function = cell.function;
            rec.dim = d;
            rec.size = size;
            rec.rep = cell.rep;
            rec.variant = Variant::transferred;
            rec.smape = stats::smape(
                test_set.y,
                transfer::transferred_predict_batch(source_model, result.transform, test_set.X));
            rec.opt_loss = result.opt.best_f;
            rec.wall_ms = elapsed_ms(start, cfg.record_timing);
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            out.errors.push_back({cell.function, d, size, cell.rep, "transfer", e.what()});
        }
    }
    return out;
}

} // namespace

RunOutput run_experiment(const ExperimentConfig& config) {
    config.validate();

    std::vector<Cell> cells;
    Dataset csv_source, csv_target;
    if (config.mode == ExperimentConfig::Mode::synthetic) {
        for (std::size_t f = 0; f < config.synthetic.functions.size(); ++f)
            for (int d : config.synthetic.dimensions)
                for (int rep = 0; rep < config.repetitions; ++rep) {
                    Cell c;
                    c.fid = config.synthetic.functions[f];
                    c.function = bench::to_string(c.fid);
                    c.fn_tag = static_cast<std::uint64_t>(c.fid) + 1;
                    c.dim = d;
                    c.rep = rep;
                    cells.push_back(std::move(c));
                }
    } else {
        csv_source = io::ingest_csv(config.csv.source_path);
        csv_target = io::ingest_csv(config.csv.target_path);
        if (csv_source.dim() != csv_target.dim())
            throw std::invalid_argument("config error: source dimension " +
                                        std::to_string(csv_source.dim()) +
                                        " does not match target dimension " +
                                        std::to_string(csv_target.dim()));
        for (int rep = 0; rep < config.repetitions; ++rep) {
            Cell c;
            c.function = std::filesystem::path(config.csv.target_path).stem().string();
            c.fn_tag = 0;
            c.dim = static_cast<int>(csv_source.dim());
            c.rep = rep;
            cells.push_back(std::move(c));
        }
    }

    std::vector<CellOutput> outputs(cells.size());
    const int workers = std::min<int>(config.workers, static_cast<int>(cells.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            outputs[i] = config.mode == ExperimentConfig::Mode::synthetic
                             ? run_synthetic_cell(config, cells[i])
                             : run_csv_cell(config, cells[i], csv_source, csv_target);
    } else {
        std::atomic<std::size_t> next{0};
        auto work = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size())
                    return;
                outputs[i] = config.mode == ExperimentConfig::Mode::synthetic
                                 ? run_synthetic_cell(config, cells[i])
                                 : run_csv_cell(config, cells[i], csv_source, csv_target);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }

    RunOutput out;
    for (auto& cell_out : outputs) {
        out.records.insert(out.records.end(), cell_out.records.begin(), cell_out.records.end());
        out.errors.insert(out.errors.end(), cell_out.errors.begin(), cell_out.errors.end());
    }
    return out;
}

namespace {

struct CellKey {
    std::string function;
    int dim;
    int size;

    bool operator<(const CellKey& o) const {
        return std::tie(function, dim, size) < std::tie(o.function, o.dim, o.size);
    }
};

std::string opt_loss_text(const ResultRecord& r) {
    return r.opt_loss ? io::format_double(*r.opt_loss) : std::string();
}

} // namespace

void emit_results(const RunOutput& output, const ExperimentConfig& config,
                  const std::string& out_dir) {
    if (output.records.empty())
        throw std::invalid_argument("emit_results: no records to write");
    std::filesystem::create_directories(out_dir);
    const auto path = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    {
        std::ofstream out(path("records.csv"), std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open '" + path("records.csv") + "' for writing");
        out << "function,dim,size,rep,variant,smape,opt_loss,wall_ms\n";
        for (const auto& r : output.records)
            out << r.function << ',' << r.dim << ',' << r.size << ',' << r.rep << ','
                << to_string(r.variant) << ',' << io::format_double(r.smape) << ','
                << opt_loss_text(r) << ',' << r.wall_ms << '\n';
    }

    if (!output.errors.empty()) {
        std::ofstream out(path("errors.csv"), std::ios::binary);
        out << "function,dim,size,rep,stage,message\n";
        for (const auto& e : output.errors) {
            std::string msg = e.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out << e.function << ',' << e.dim << ',' << e.size << ',' << e.rep << ',' << e.stage
                << ',' << msg << '\n';
        }
    }

    // means per (function, dim, size, variant); original rows (size 0) are
    // replicated into every size row of the summary
    std::map<CellKey, std::map<Variant, std::vector<double>>> cells;
    std::map<std::pair<std::string, int>, std::vector<double>> originals;
    std::vector<CellKey> order;
    for (const auto& r : output.records) {
        if (r.variant == Variant::original) {
            originals[{r.function, r.dim}].push_back(r.smape);
            continue;
        }
        const CellKey key{r.function, r.dim, r.size};
        if (!cells.count(key))
            order.push_back(key);
        cells[key][r.variant].push_back(r.smape);
    }
    std::sort(order.begin(), order.end());

    {
        std::ofstream out(path("summary.csv"), std::ios::binary);
        out << "function,dim,size,original_mean,original_std,scratch_mean,scratch_std,"
               "transferred_mean,transferred_std,n_reps\n";
        for (const auto& key : order) {
            const auto& by_variant = cells.at(key);
            const auto orig_it = originals.find({key.function, key.dim});
            std::string orig_mean = "", orig_std = "";
            if (orig_it != originals.end()) {
                const auto s = stats::summarize(orig_it->second);
                orig_mean = io::format_double(s.mean);
                orig_std = io::format_double(s.stddev);
            }
            std::string scratch_mean = "", scratch_std = "", trans_mean = "", trans_std = "";
            int n_reps = 0;
            if (auto it = by_variant.find(Variant::scratch); it != by_variant.end()) {
                const auto s = stats::summarize(it->second);
                scratch_mean = io::format_double(s.mean);
                scratch_std = io::format_double(s.stddev);
                n_reps = std::max(n_reps, s.n);
            }
            if (auto it = by_variant.find(Variant::transferred); it != by_variant.end()) {
                const auto s = stats::summarize(it->second);
                trans_mean = io::format_double(s.mean);
                trans_std = io::format_double(s.stddev);
                n_reps = std::max(n_reps, s.n);
            }
            out << key.function << ',' << key.dim << ',' << key.size << ',' << orig_mean << ','
                << orig_std << ',' << scratch_mean << ',' << scratch_std << ',' << trans_mean
                << ',' << trans_std << ',' << n_reps << '\n';
        }
    }

    {
        std::ofstream out(path("heatmap.csv"), std::ios::binary);
        out << "function,dim,size,smape_diff_percent\n";
        for (const auto& key : order) {
            const auto& by_variant = cells.at(key);
            const auto s_it = by_variant.find(Variant::scratch);
            const auto t_it = by_variant.find(Variant::transferred);
            if (s_it == by_variant.end() || t_it == by_variant.end())
                continue;
            const double diff = stats::smape_diff_percent(stats::summarize(s_it->second).mean,
                                                          stats::summarize(t_it->second).mean);
            out << key.function << ',' << key.dim << ',' << key.size << ','
                << io::format_double(diff) << '\n';
        }
    }

    {
        std::ofstream out(path("curves.csv"), std::ios::binary);
        out << "function,dim,size,variant,smape_mean,smape_std\n";
        for (const auto& key : order) {
            const auto& by_variant = cells.at(key);
            const auto orig_it = originals.find({key.function, key.dim});
            if (orig_it != originals.end()) {
                const auto s = stats::summarize(orig_it->second);
                out << key.function << ',' << key.dim << ',' << key.size << ",original,"
                    << io::format_double(s.mean) << ',' << io::format_double(s.stddev) << '\n';
            }
            for (const Variant v : {Variant::scratch, Variant::transferred}) {
                if (auto it = by_variant.find(v); it != by_variant.end()) {
                    const auto s = stats::summarize(it->second);
                    out << key.function << ',' << key.dim << ',' << key.size << ','
                        << to_string(v) << ',' << io::format_double(s.mean) << ','
                        << io::format_double(s.stddev) << '\n';
                }
            }
        }
    }
}

std::vector<ResultRecord> read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open records file '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("records file '" + path + "' is empty");
    {
        std::string header = line;
        if (!header.empty() && header.back() == '\r')
            header.pop_back();
        if (header != "function,dim,size,rep,variant,smape,opt_loss,wall_ms")
            throw std::runtime_error("records file '" + path + "': unexpected header");
    }

    std::vector<ResultRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (line.back() == ',')
            cells.push_back("");
        if (cells.size() != 8)
            throw std::runtime_error("records file '" + path + "' line " +
                                     std::to_string(line_no) + ": expected 8 cells");
        try {
            ResultRecord r;
            r.function = cells[0];
            r.dim = std::stoi(cells[1]);
            r.size = std::stoi(cells[2]);
            r.rep = std::stoi(cells[3]);
            r.variant = variant_from_string(cells[4]);
            r.smape = std::stod(cells[5]);
            if (!cells[6].empty())
                r.opt_loss = std::stod(cells[6]);
            r.wall_ms = std::stoll(cells[7]);
            records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("records file '" + path + "' line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::vector<CellSignificance> run_significance(const std::vector<ResultRecord>& records,
                                               double alpha) {
    std::map<std::pair<std::string, int>, std::vector<double>> originals;
    std::map<CellKey, std::map<Variant, std::vector<double>>> cells;
    std::vector<CellKey> order;
    for (const auto& r : records) {
        if (r.variant == Variant::original) {
            originals[{r.function, r.dim}].push_back(r.smape);
            continue;
        }
        const CellKey key{r.function, r.dim, r.size};
        if (!cells.count(key))
            order.push_back(key);
        cells[key][r.variant].push_back(r.smape);
    }
    std::sort(order.begin(), order.end());

    std::vector<CellSignificance> out;
    for (const auto& key : order) {
        CellSignificance cs;
        cs.function = key.function;
        cs.dim = key.dim;
        cs.size = key.size;

        const auto orig_it = originals.find({key.function, key.dim});
        const auto& by_variant = cells.at(key);
        const auto s_it = by_variant.find(Variant::scratch);
        const auto t_it = by_variant.find(Variant::transferred);
        if (orig_it == originals.end() || s_it == by_variant.end() || t_it == by_variant.end() ||
            orig_it->second.size() < 2 || s_it->second.size() < 2 || t_it->second.size() < 2) {
            out.push_back(cs); // inconclusive
            continue;
        }

        // group order: 0 original, 1 scratch, 2 transferred
        const std::vector<std::vector<double>> groups = {orig_it->second, s_it->second,
                                                         t_it->second};
        const auto kw = stats::kruskal_wallis(groups);
        cs.conclusive = true;
        cs.kw_h = kw.h;
        cs.kw_p = kw.p;
        if (kw.p <= alpha) {
            for (const auto& pair : stats::dunn_posthoc(groups, alpha)) {
                if (!pair.significant)
                    continue;
                if (pair.a == 0 && pair.b == 2)
                    cs.transferred_vs_original = pair.better == 2 ? "better" : "worse";
                if (pair.a == 1 && pair.b == 2)
                    cs.transferred_vs_scratch = pair.better == 2 ? "better" : "worse";
            }
        }
        out.push_back(cs);
    }
    return out;
}

std::string format_significance(const std::vector<CellSignificance>& cells) {
    std::ostringstream out;
    out << "function,dim,size,kw_h,kw_p,transferred_vs_original,transferred_vs_scratch\n";
    for (const auto& c : cells) {
        out << c.function << ',' << c.dim << ',' << c.size << ',';
        if (c.conclusive)
            out << io::format_double(c.kw_h) << ',' << io::format_double(c.kw_p) << ','
                << c.transferred_vs_original << ',' << c.transferred_vs_scratch << '\n';
        else
            out << ",,inconclusive,inconclusive\n";
    }
    return out.str();
}

} // namespace affinerf::runner
