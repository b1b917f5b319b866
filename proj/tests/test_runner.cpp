#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sqdm/matrix_io.hpp"
#include "sqdm/rng.hpp"
#include "sqdm/runner.hpp"

using namespace sqdm;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("sqdm_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// 16x16 smoke-scale configuration with a smooth two-blob sample
RunConfig smoke_config() {
    RunConfig cfg;
    cfg.sample.grid_width = cfg.sample.grid_height = 16;
    cfg.sample.extent_x = cfg.sample.extent_y = 600.0;
    cfg.sample.blobs.push_back({200.0, 200.0, 200.0, 200.0, 60.0});
    cfg.sample.blobs.push_back({430.0, 430.0, 180.0, 180.0, -60.0});
    cfg.sample.total_variation_mv = 120.0;
    cfg.scan.lines = 16;
    cfg.scan.pixels_per_line = 16;
    cfg.scan.scan_time_total = 288.0;
    cfg.controller = "stc";
    cfg.seed = 1234;
    return cfg;
}

} // namespace

TEST_CASE("config files parse with defaults and sections") {
    std::string dir = temp_dir("config");
    {
        std::ofstream f(dir + "/run.cfg");
        f << "# comment line\n"
          << "controller = stc\n"
          << "seed = 99\n"
          << "scan.lines = 32\n"
          << "scan.pixels_per_line = 24\n"
          << "esc.k = -2e-5\n"
          << "stc.dip = pos\n"
          << "sample.blob.0 = 100 100 50 50 80\n"
          << "sweep.scan_times = 100 200\n";
    }
    RunConfig cfg = load_run_config(dir + "/run.cfg");
    CHECK(cfg.controller == "stc");
    CHECK(cfg.seed.value() == 99);
    CHECK(cfg.scan.lines == 32);
    CHECK(cfg.scan.pixels_per_line == 24);
    CHECK(cfg.esc_k.value() == doctest::Approx(-2e-5));
    CHECK(cfg.dip == DipSelector::Positive);
    REQUIRE(cfg.sample.blobs.size() == 1);
    CHECK(cfg.sample.blobs[0].amp_mv == doctest::Approx(80.0));
    REQUIRE(cfg.sweep_scan_times.size() == 2);
    // defaults survive
    CHECK(cfg.omega_pll == doctest::Approx(10.0));
    CHECK(cfg.sigma_n == doctest::Approx(0.03));
    CHECK(cfg.scan.ts == doctest::Approx(0.005));
}

TEST_CASE("a config without a seed is rejected") {
    RunConfig cfg = smoke_config();
    cfg.seed.reset();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("controller parameters resolve per dip") {
    RunConfig cfg;
    cfg.seed = 1;
    cfg.dip = DipSelector::Negative;
    CHECK(cfg.resolved_esc().k == doctest::Approx(-5e-5));
    CHECK(cfg.resolved_stc().gain == doctest::Approx(0.04));
    CHECK(cfg.resolved_stc().rho == doctest::Approx(0.63));
    cfg.dip = DipSelector::Positive;
    CHECK(cfg.resolved_esc().k == doctest::Approx(-6e-5));
    CHECK(cfg.resolved_stc().gain == doctest::Approx(-0.003));
    CHECK(cfg.resolved_stc().rho == doctest::Approx(0.59));
    // explicit values win
    cfg.esc_k = -1e-5;
    cfg.stc_gain = -0.01;
    CHECK(cfg.resolved_esc().k == doctest::Approx(-1e-5));
    CHECK(cfg.resolved_stc().gain == doctest::Approx(-0.01));
    // relative frequencies scale with the PLL bandwidth
    cfg.omega_pll = 20.0;
    EscParams esc = cfg.resolved_esc();
    CHECK(esc.omega_d == doctest::Approx(80.0));
    CHECK(esc.omega_L == doctest::Approx(16.0));
    CHECK(esc.omega_H == doctest::Approx(240.0));
}

TEST_CASE("smoke scan completes without faults and honors the record contract") {
    RunConfig cfg = smoke_config();
    GroundTruth truth = make_ground_truth(cfg);
    ScanResult res = run_scan(cfg, truth);

    CHECK(!res.dip_lost);
    CHECK(res.fault_samples == 0);
    CHECK(res.map.missing.empty());
    REQUIRE(!res.record.empty());
    CHECK(res.record.size() ==
          static_cast<std::size_t>(std::llround(cfg.scan.scan_time_total / cfg.scan.ts)));

    for (std::size_t i = 0; i < res.record.size(); ++i) {
        const auto& s = res.record[i];
        // the imaging bias never contains the dither
        CHECK(s.v_b == s.v_b_c + s.v_b_ff);
        if (i > 0)
            CHECK(s.t - res.record[i - 1].t == doctest::Approx(cfg.scan.ts).epsilon(1e-9));
    }
    // feedforward became active after the first line
    CHECK(res.ff_was_enabled);
}

TEST_CASE("disabled feedforward contributes exactly zero") {
    RunConfig cfg = smoke_config();
    cfg.ff_enabled = false;
    GroundTruth truth = make_ground_truth(cfg);
    ScanResult res = run_scan(cfg, truth);
    for (const auto& s : res.record) {
        CHECK(s.v_b_ff == 0.0);
        CHECK(s.v_b == s.v_b_c);
    }
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
    RunConfig cfg = smoke_config();
    GroundTruth truth = make_ground_truth(cfg);
    std::string dir_a = temp_dir("det_a");
    std::string dir_b = temp_dir("det_b");
    write_scan_artifacts(dir_a, cfg, run_scan(cfg, truth), 0.0);
    write_scan_artifacts(dir_b, cfg, run_scan(cfg, truth), 0.0);
    CHECK(slurp(dir_a + "/record.csv") == slurp(dir_b + "/record.csv"));
    CHECK(slurp(dir_a + "/map_neg.txt") == slurp(dir_b + "/map_neg.txt"));
}

TEST_CASE("record csv round-trips") {
    RunConfig cfg = smoke_config();
    cfg.scan.scan_time_total = 36.0;
    cfg.scan.lines = 2;
    cfg.sample.grid_height = 2;
    GroundTruth truth = make_ground_truth(cfg);
    ScanResult res = run_scan(cfg, truth);
    std::string dir = temp_dir("csv");
    write_record_csv(dir + "/record.csv", res.record);
    ScanRecord back = read_record_csv(dir + "/record.csv");
    REQUIRE(back.size() == res.record.size());
    for (std::size_t i = 0; i < back.size(); i += 97) {
        CHECK(back[i].line == res.record[i].line);
        CHECK(back[i].pixel_x == res.record[i].pixel_x);
        CHECK(back[i].v_b == doctest::Approx(res.record[i].v_b).epsilon(1e-10));
    }
}

TEST_CASE("dip maps round-trip through their text format") {
    SampleSpec spec;
    spec.grid_width = spec.grid_height = 8;
    spec.blobs.push_back({300.0, 300.0, 150.0, 150.0, 80.0});
    Grid phi = gen_potential(spec, 5);
    DipMaps maps = potential_to_dipmaps(phi, spec);
    std::string dir = temp_dir("maps");
    save_dipmaps(dir, maps);
    DipMaps back = load_dipmaps(dir);
    CHECK(back.extent_x == doctest::Approx(maps.extent_x));
    for (std::size_t i = 0; i < maps.v_neg.data.size(); ++i) {
        CHECK(back.v_neg.data[i] == doctest::Approx(maps.v_neg.data[i]).epsilon(1e-10));
        CHECK(back.v_pos.data[i] == doctest::Approx(maps.v_pos.data[i]).epsilon(1e-10));
    }
}

TEST_CASE("scan pair reconstructs the potential against the truth") {
    RunConfig cfg = smoke_config();
    GroundTruth truth = make_ground_truth(cfg);
    PairResult pr = run_scan_pair(cfg, truth, 42);
    REQUIRE(pr.completed);
    CHECK(pr.scores.mse >= 0.0);
    CHECK(pr.scores.rmse_mv < 10.0);  // smooth sample tracks well
    CHECK(std::isfinite(pr.scores.psnr_db));
    // two runs used different derived seeds
    CHECK(pr.neg.seed != pr.pos.seed);
}

TEST_CASE("sweep requires an axis and records one row per variant") {
    RunConfig cfg = smoke_config();
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);

    cfg.sweep_scan_times = {144.0, 288.0};
    std::vector<SweepRow> rows = run_sweep(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].scan_time == doctest::Approx(144.0));
    CHECK(rows[1].scan_time == doctest::Approx(288.0));
    CHECK(rows[0].seed != rows[1].seed);
    for (const auto& r : rows) {
        CHECK(r.status == "ok");
        CHECK(std::isfinite(r.mse));
        CHECK(r.speedup_vs_grid ==
              doctest::Approx(3.0 * 16 * 16 / r.scan_time));
    }

    std::string dir = temp_dir("sweep");
    write_sweep_csv(dir + "/sweep.csv", rows);
    write_sweep_summary(dir + "/sweep_summary.txt", cfg, rows);
    KeyValueFile summary = KeyValueFile::load(dir + "/sweep_summary.txt");
    CHECK(summary.get_int("variants", 0) == 2);
}

TEST_CASE("regain sweep reports settle times") {
    RunConfig cfg;
    cfg.seed = 7;
    cfg.controller = "esc";
    cfg.sigma_n = 0.0;
    cfg.sweep_experiment = "regain";
    cfg.sweep_depth_scales = {1.0, 2.0};
    std::vector<SweepRow> rows = run_sweep(cfg);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.status == "ok");
        CHECK(r.settle_time_s > 0.0);
    }
    // deeper dip recovers faster
    CHECK(rows[1].settle_time_s < rows[0].settle_time_s);
}

TEST_CASE("variant seeds decorrelate") {
    std::uint64_t master = 555;
    CHECK(derive_seed(master, 0) != derive_seed(master, 1));
    CHECK(derive_seed(master, 0) != derive_seed(master + 1, 0));
}

TEST_CASE("a steep sample scanned fast without feedforward loses the dip") {
    RunConfig cfg;
    cfg.sample.grid_width = cfg.sample.grid_height = 32;
    cfg.sample.total_variation_mv = 190.5;
    cfg.sample.blobs.push_back({300.0, 520.0, 100.0, 170.0, -190.5});
    cfg.scan.lines = 32;
    cfg.scan.pixels_per_line = 32;
    cfg.scan.scan_time_total = 384.0;  // 3x the nominal speed
    cfg.controller = "stc";
    cfg.ff_enabled = false;
    cfg.seed = 3;

    GroundTruth truth = make_ground_truth(cfg);
    ScanResult res = run_scan(cfg, truth);
    CHECK(res.dip_lost);
    CHECK(res.dip_lost_at > 0.0);
    CHECK(res.fault_samples > 0);
    // the run aborted early but the partial record and map survive
    CHECK(res.record.size() <
          static_cast<std::size_t>(std::llround(cfg.scan.scan_time_total / cfg.scan.ts)));
    CHECK(!res.record.empty());
    CHECK(!res.map.missing.empty());
}
