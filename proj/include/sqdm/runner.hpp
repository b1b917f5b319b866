#ifndef SQDM_RUNNER_HPP
#define SQDM_RUNNER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sqdm/config.hpp"
#include "sqdm/imaging.hpp"
#include "sqdm/plant.hpp"

namespace sqdm {

/// Outcome of one closed-loop scan of a single dip.
struct ScanResult {
    ScanRecord record;
    AssembledMap map;
    std::string controller;
    DipSelector dip = DipSelector::Negative;
    std::uint64_t seed = 0;

    double v_init = 0.0;        // V, bias placed at the reference before the scan
    double delta_f_ref = 0.0;   // Hz (STC only, 0 for ESC)
    bool dip_lost = false;      // latched: > 1 s outside the +-3w window
    double dip_lost_at = 0.0;   // s
    int fault_samples = 0;      // samples with any fault bit set

    /// Per-sample feedback error: e_f for the STC, the raw slope signal xi3
    /// for the ESC. Diagnostic, not part of the record file.
    std::vector<double> fb_error;

    // derived quantities recorded in the manifest
    double derived_phase = 0.0;     // rad (ESC)
    double derived_gain = 0.0;      // K_ESC (ESC) or K_STC
    double derived_alpha = 0.0;     // PLL discretization pole
    double ff_baseline = 0.0;
    bool ff_was_enabled = false;
};

/// Ground truth used by a run: dip maps plus the potential they encode.
struct GroundTruth {
    DipMaps maps;
    Grid phi;
};

/// Synthesize (or load, when cfg.maps_dir is set) the ground truth.
GroundTruth make_ground_truth(const RunConfig& cfg);

/// Closed-loop raster scan of the configured dip using cfg.seed. The
/// single-argument overload synthesizes/loads the ground truth itself.
ScanResult run_scan(const RunConfig& cfg, const GroundTruth& truth);
ScanResult run_scan(const RunConfig& cfg);

/// Scan both dips with the configured controller, reconstruct the potential
/// with the reference points recorded at scan start, and score against the
/// truth. Seeds for the two runs derive from `master_seed`.
struct PairResult {
    ScanResult neg;
    ScanResult pos;
    PotentialImage image;
    ScoreResult scores;
    bool completed = false;  // false when either dip was lost
};
PairResult run_scan_pair(const RunConfig& cfg, const GroundTruth& truth,
                         std::uint64_t master_seed);

/// Extremum-seeking regain experiment: track a static dip, then at
/// `shift_time` displace the bias toward the inner slope by `shift` volts
/// and measure how long the controller needs to re-enter (and stay in) a
/// band of `settle_band` volts around the minimum.
struct RegainResult {
    double settle_time = -1.0;  // s after the shift; negative: never settled
    double v_min = 0.0;         // V, true minimum being sought
};
RegainResult run_regain(const RunConfig& cfg, std::uint64_t seed, double shift,
                        double shift_time = 10.0, double total_time = 40.0,
                        double settle_band = 2e-3, double settle_hold = 1.0);

struct SweepRow {
    int index = 0;
    std::string controller;
    std::string experiment;
    double scan_time = 0.0;
    double depth_scale = 1.0;
    double width_scale = 1.0;
    bool ff = true;
    std::uint64_t seed = 0;
    std::string status = "ok";  // ok | dip_lost | error:<what>
    int faults = 0;
    double mse = 0.0;
    double rmse_mv = 0.0;
    double psnr_db = 0.0;
    double settle_time_s = -1.0;
    double pixel_rate = 0.0;    // unique pixels per second, per dip
    double speedup_vs_grid = 0.0;  // vs the 3 s/pixel spectroscopy baseline
};

/// One independent run per variant (cartesian product of the configured
/// axes). Failures are recorded in-row; the sweep continues.
std::vector<SweepRow> run_sweep(const RunConfig& cfg);

/// Seconds of grid spectroscopy replaced by one second of continuous scan.
double grid_speedup(const ScanConfig& scan);

// ----- artifact persistence ------------------------------------------

void write_record_csv(const std::string& path, const ScanRecord& record);
ScanRecord read_record_csv(const std::string& path);

/// record.csv + assembled map + manifest.txt under `out_dir` (created if
/// missing). Returns the manifest path.
std::string write_scan_artifacts(const std::string& out_dir, const RunConfig& cfg,
                                 const ScanResult& result, double wall_seconds);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
void write_sweep_summary(const std::string& path, const RunConfig& cfg,
                         const std::vector<SweepRow>& rows);

void write_metrics(const std::string& path, const ScoreResult& scores);

} // namespace sqdm

#endif
