#ifndef SQDM_CONFIG_HPP
#define SQDM_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sqdm/esc.hpp"
#include "sqdm/plant.hpp"
#include "sqdm/samplegen.hpp"
#include "sqdm/spectrum.hpp"
#include "sqdm/stc.hpp"

namespace sqdm {

class KeyValueFile;

/// Everything one closed-loop run (or sweep) needs. Loaded from a flat
/// `key = value` config file with dotted sections (sample.*, scan.*,
/// plant.*, spectrum.*, esc.*, stc.*, ff.*, sweep.*); command-line flags
/// override individual fields afterwards. The seed is mandatory — there is
/// no wall-clock fallback.
struct RunConfig {
    // sample: synthetic spec or directory with stored maps + truth
    SampleSpec sample;
    std::string maps_dir;  // non-empty: load maps/truth from files instead

    SpectrumParams spectrum;
    double depth_scale = 1.0;  // scales both dip depths
    double width_scale = 1.0;  // scales both dip widths

    ScanConfig scan;
    double omega_pll = 10.0;  // 1/s
    double sigma_n = 0.03;    // Hz

    std::string controller = "esc";  // "esc" | "stc"
    DipSelector dip = DipSelector::Negative;

    // esc knobs; frequencies relative (omega_d to omega_pll, filters to omega_d)
    double esc_a_d = 1e-3;
    double esc_omega_d_rel = 4.0;
    double esc_omega_L_rel = 0.2;
    double esc_omega_H_rel = 3.0;
    std::optional<double> esc_k;        // absolute, for the selected dip
    std::optional<double> esc_k_scale;  // multiplies the per-dip default gain

    std::optional<double> stc_rho;
    std::optional<double> stc_gain;

    bool ff_enabled = true;
    int ff_after_lines = 1;
    // mean-filter window in samples; wide enough to quench sample-scale
    // noise that the feedback is too slow to remove from the replayed line
    int ff_window = 61;

    std::optional<std::uint64_t> seed;

    // sweep axes; empty axis = pinned to the single-run value
    std::vector<double> sweep_scan_times;
    std::vector<double> sweep_depth_scales;
    std::vector<double> sweep_width_scales;
    std::vector<std::string> sweep_controllers;
    std::vector<int> sweep_ff;  // 0/1
    std::string sweep_experiment = "scan";  // "scan" | "regain"

    /// Spectrum with the depth/width scales applied.
    SpectrumParams scaled_spectrum() const;
    /// Fully resolved controller parameters for the selected dip.
    EscParams resolved_esc() const;
    StcParams resolved_stc() const;  // delta_f_ref still unset (run-time value)

    /// Throws std::invalid_argument on missing seed or bad values.
    void validate() const;

    /// Every effective value, for the manifest.
    KeyValueFile to_kv() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_kv(const KeyValueFile& kv);

} // namespace sqdm

#endif
