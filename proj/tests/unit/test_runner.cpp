#include "affinerf/runner.hpp"

#include "affinerf/csv.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace affinerf;
using namespace affinerf::runner;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.mode = ExperimentConfig::Mode::synthetic;
    cfg.synthetic.functions = {bench::FunctionId::sphere};
    cfg.synthetic.dimensions = {2};
    cfg.synthetic.train_points_per_dim = 60;
    cfg.transfer_sizes = {20};
    cfg.repetitions = 1;
    cfg.seed = 7;
    cfg.forest.n_trees = 10;
    cfg.optimizer.budget = 600;
    cfg.optimizer.restarts = 1;
    cfg.record_timing = false;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / name;
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_SUITE_BEGIN("runner");

TEST_CASE("config parsing is strict") {
    SUBCASE("round trip of a complete document") {
        const std::string text = R"({
            "mode": "synthetic",
            "synthetic": {"functions": ["F1", "rastrigin"], "dimensions": [2, 3]},
            "transfer_sizes": [10, 50],
            "repetitions": 4,
            "seed": 99,
            "forest": {"n_trees": 25, "max_depth": null},
            "optimizer": {"budget": 4000, "restarts": 2, "inject_identity": false},
            "log_transform": {"enabled": true, "epsilon": 1e-10},
            "output_dir": "out",
            "workers": 2
        })";
        const auto cfg = parse_config(text);
        CHECK(cfg.synthetic.functions.size() == 2);
        CHECK(cfg.synthetic.functions[1] == bench::FunctionId::rastrigin);
        CHECK(cfg.repetitions == 4);
        CHECK(cfg.seed == 99);
        CHECK(cfg.forest.n_trees == 25);
        CHECK_FALSE(cfg.forest.max_depth.has_value());
        CHECK(cfg.optimizer.budget == 4000);
        CHECK_FALSE(cfg.optimizer.inject_identity);
        CHECK(cfg.log_transform.epsilon == 1e-10);
        CHECK(cfg.workers == 2);
    }
    SUBCASE("unknown keys are rejected, including nested ones") {
        CHECK_THROWS_WITH_AS(
            parse_config(R"({"mode": "synthetic", "transfer_sizes": [10], "typo_key": 1,
                             "synthetic": {"functions": ["F1"], "dimensions": [2]}})"),
            doctest::Contains("typo_key"), std::invalid_argument);
        CHECK_THROWS_WITH_AS(
            parse_config(R"({"mode": "synthetic", "transfer_sizes": [10],
                             "synthetic": {"functions": ["F1"], "dimensions": [2]},
                             "forest": {"ntrees": 10}})"),
            doctest::Contains("ntrees"), std::invalid_argument);
    }
    SUBCASE("transfer sizes must increase strictly") {
        CHECK_THROWS_WITH_AS(
            parse_config(R"({"mode": "synthetic", "transfer_sizes": [10, 10],
                             "synthetic": {"functions": ["F1"], "dimensions": [2]}})"),
            doctest::Contains("strictly increasing"), std::invalid_argument);
    }
    SUBCASE("csv mode requires existing paths") {
        CHECK_THROWS_WITH_AS(
            parse_config(R"({"mode": "csv", "transfer_sizes": [5],
                             "csv": {"source_path": "/tmp/affinerf_nope_s.csv",
                                     "target_path": "/tmp/affinerf_nope_t.csv"}})"),
            doctest::Contains("does not exist"), std::invalid_argument);
    }
}

TEST_CASE("run_experiment produces one original plus scratch/transferred per size") {
    const auto cfg = small_config();
    const auto out = run_experiment(cfg);
    CHECK(out.errors.empty());
    REQUIRE(out.records.size() == 3);
    CHECK(out.records[0].variant == Variant::original);
    CHECK(out.records[0].size == 0);
    CHECK(out.records[1].variant == Variant::scratch);
    CHECK(out.records[2].variant == Variant::transferred);
    CHECK(out.records[2].opt_loss.has_value());
    CHECK_FALSE(out.records[1].opt_loss.has_value());
    for (const auto& r : out.records) {
        CHECK(r.smape >= 0.0);
        CHECK(r.smape <= 1.0);
        CHECK(r.wall_ms == 0); // timing disabled
    }
}

TEST_CASE("record cardinality scales as reps * (1 + 2 * sizes)") {
    auto cfg = small_config();
    cfg.transfer_sizes = {10, 20};
    cfg.repetitions = 2;
    cfg.optimizer.budget = 300;
    const auto out = run_experiment(cfg);
    CHECK(out.errors.empty());
    CHECK(out.records.size() == 2 * (1 + 2 * 2));
}

TEST_CASE("same config and seed reproduce identical records") {
    const auto cfg = small_config();
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].smape == b.records[i].smape);
        CHECK(a.records[i].variant == b.records[i].variant);
        CHECK(a.records[i].opt_loss == b.records[i].opt_loss);
    }
}

TEST_CASE("worker count does not change results") {
    auto cfg = small_config();
    cfg.repetitions = 3;
    const auto serial = run_experiment(cfg);
    cfg.workers = 4;
    const auto parallel = run_experiment(cfg);
    REQUIRE(serial.records.size() == parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        CHECK(serial.records[i].smape == parallel.records[i].smape);
        CHECK(serial.records[i].rep == parallel.records[i].rep);
    }
}

TEST_CASE("emit_results") {
    TempDir dir("affinerf_emit_test");
    auto cfg = small_config();
    cfg.repetitions = 2;
    const auto out = run_experiment(cfg);
    emit_results(out, cfg, dir.path.string());

    SUBCASE("records file reads back") {
        const auto records = read_records((dir.path / "records.csv").string());
        REQUIRE(records.size() == out.records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(records[i].smape == out.records[i].smape);
            CHECK(records[i].variant == out.records[i].variant);
        }
    }
    SUBCASE("heatmap cell equals the recomputed summary difference") {
        std::vector<double> scratch, transferred;
        for (const auto& r : out.records) {
            if (r.variant == Variant::scratch)
                scratch.push_back(r.smape);
            if (r.variant == Variant::transferred)
                transferred.push_back(r.smape);
        }
        const double expected = stats::smape_diff_percent(stats::summarize(scratch).mean,
                                                          stats::summarize(transferred).mean);
        const std::string heatmap = slurp(dir.path / "heatmap.csv");
        std::istringstream ss(heatmap);
        std::string line;
        std::getline(ss, line); // header
        REQUIRE(std::getline(ss, line));
        const auto comma = line.rfind(',');
        CHECK(std::stod(line.substr(comma + 1)) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("re-emitting is byte identical") {
        const std::string first = slurp(dir.path / "records.csv");
        const std::string summary_first = slurp(dir.path / "summary.csv");
        emit_results(out, cfg, dir.path.string());
        CHECK(slurp(dir.path / "records.csv") == first);
        CHECK(slurp(dir.path / "summary.csv") == summary_first);
    }
    SUBCASE("summary has one row per size with std columns") {
        const std::string summary = slurp(dir.path / "summary.csv");
        std::istringstream ss(summary);
        std::string line;
        std::getline(ss, line);
        CHECK(line ==
              "function,dim,size,original_mean,original_std,scratch_mean,scratch_std,"
              "transferred_mean,transferred_std,n_reps");
        int rows = 0;
        while (std::getline(ss, line))
            if (!line.empty())
                ++rows;
        CHECK(rows == 1);
    }
}

TEST_CASE("csv mode trains on the source file and subsamples the target") {
    TempDir dir("affinerf_csv_mode_test");
    std::filesystem::create_directories(dir.path);

    Rng rng(60);
    const Matrix src_X = bench::sample_uniform(120, 2, -5.0, 5.0, rng);
    Vector src_y(120);
    for (int i = 0; i < 120; ++i)
        src_y[i] = src_X.row(i).squaredNorm();
    io::write_csv(Dataset(src_X, src_y), (dir.path / "source.csv").string());

    const auto inst = bench::make_instance(bench::FunctionId::sphere, 2, 61);
    const Matrix tgt_X = bench::sample_uniform(80, 2, -5.0, 5.0, rng);
    Vector tgt_y(80);
    for (int i = 0; i < 80; ++i)
        tgt_y[i] = inst.target_value(tgt_X.row(i));
    io::write_csv(Dataset(tgt_X, tgt_y), (dir.path / "target.csv").string());

    ExperimentConfig cfg;
    cfg.mode = ExperimentConfig::Mode::csv;
    cfg.csv.source_path = (dir.path / "source.csv").string();
    cfg.csv.target_path = (dir.path / "target.csv").string();
    cfg.transfer_sizes = {15};
    cfg.repetitions = 2;
    cfg.seed = 62;
    cfg.forest.n_trees = 10;
    cfg.optimizer.budget = 400;
    cfg.optimizer.restarts = 0;
    cfg.log_transform.enabled = false;
    cfg.record_timing = false;

    const auto out = run_experiment(cfg);
    CHECK(out.errors.empty());
    CHECK(out.records.size() == 2 * 3);

    SUBCASE("deterministic") {
        const auto again = run_experiment(cfg);
        REQUIRE(again.records.size() == out.records.size());
        for (std::size_t i = 0; i < out.records.size(); ++i)
            CHECK(again.records[i].smape == out.records[i].smape);
    }
    SUBCASE("excluding the transfer rows changes the test set") {
        auto cfg2 = cfg;
        cfg2.csv.exclude_transfer_from_test = true;
        const auto excluded = run_experiment(cfg2);
        CHECK(excluded.errors.empty());
        // same transfer sample, different test set: scratch smape moves
        CHECK(excluded.records[1].smape != out.records[1].smape);
    }
    SUBCASE("oversized transfer request becomes a record-level error") {
        auto cfg3 = cfg;
        cfg3.transfer_sizes = {200};
        const auto failed = run_experiment(cfg3);
        CHECK(failed.errors.size() == 2); // one per repetition
        CHECK(failed.records.size() == 2); // originals still recorded
    }
}

TEST_CASE("run_significance") {
    SUBCASE("well separated constant variants mirror the expected ordering") {
        std::vector<ResultRecord> records;
        for (int rep = 0; rep < 10; ++rep) {
            ResultRecord orig{"sphere", 2, 0, rep, Variant::original, 0.30, {}, 0};
            ResultRecord scratch{"sphere", 2, 50, rep, Variant::scratch, 0.12, {}, 0};
            ResultRecord trans{"sphere", 2, 50, rep, Variant::transferred, 0.02, 0.001, 0};
            records.push_back(orig);
            records.push_back(scratch);
            records.push_back(trans);
        }
        const auto cells = run_significance(records, 0.05);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].conclusive);
        CHECK(cells[0].transferred_vs_original == "better");
        CHECK(cells[0].transferred_vs_scratch == "better");
    }
    SUBCASE("identical values are inconclusive in both comparisons") {
        std::vector<ResultRecord> records;
        for (int rep = 0; rep < 6; ++rep) {
            records.push_back({"sphere", 2, 0, rep, Variant::original, 0.1, {}, 0});
            records.push_back({"sphere", 2, 50, rep, Variant::scratch, 0.1, {}, 0});
            records.push_back({"sphere", 2, 50, rep, Variant::transferred, 0.1, {}, 0});
        }
        const auto cells = run_significance(records, 0.05);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].transferred_vs_original == "ns");
        CHECK(cells[0].transferred_vs_scratch == "ns");
    }
    SUBCASE("single repetition is inconclusive") {
        std::vector<ResultRecord> records = {
            {"sphere", 2, 0, 0, Variant::original, 0.3, {}, 0},
            {"sphere", 2, 50, 0, Variant::scratch, 0.2, {}, 0},
            {"sphere", 2, 50, 0, Variant::transferred, 0.1, 0.01, 0},
        };
        const auto cells = run_significance(records, 0.05);
        REQUIRE(cells.size() == 1);
        CHECK_FALSE(cells[0].conclusive);
    }
    SUBCASE("alpha=1 flags every comparison") {
        std::vector<ResultRecord> records;
        for (int rep = 0; rep < 5; ++rep) {
            records.push_back({"sphere", 2, 0, rep, Variant::original, 0.3 + 0.001 * rep, {}, 0});
            records.push_back({"sphere", 2, 50, rep, Variant::scratch, 0.2 + 0.001 * rep, {}, 0});
            records.push_back(
                {"sphere", 2, 50, rep, Variant::transferred, 0.1 + 0.001 * rep, 0.01, 0});
        }
        const auto cells = run_significance(records, 1.0);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].transferred_vs_original != "ns");
        CHECK(cells[0].transferred_vs_scratch != "ns");
    }
}

TEST_SUITE_END();
