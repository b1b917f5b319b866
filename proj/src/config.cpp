#include "sqdm/config.hpp"

#include <sstream>
#include <stdexcept>

#include "sqdm/matrix_io.hpp"

namespace sqdm {

SpectrumParams RunConfig::scaled_spectrum() const {
    SpectrumParams s = spectrum;
    s.d_neg *= depth_scale;
    s.d_pos *= depth_scale;
    s.w_neg *= width_scale;
    s.w_pos *= width_scale;
    return s;
}

EscParams RunConfig::resolved_esc() const {
    EscParams p = esc_defaults(dip, omega_pll);
    p.a_d = esc_a_d;
    p.omega_d = esc_omega_d_rel * omega_pll;
    p.omega_L = esc_omega_L_rel * p.omega_d;
    p.omega_H = esc_omega_H_rel * p.omega_d;
    if (esc_k_scale) p.k *= *esc_k_scale;
    if (esc_k) p.k = *esc_k;
    return p;
}

StcParams RunConfig::resolved_stc() const {
    StcParams p = stc_defaults(dip);
    if (stc_rho) p.rho = *stc_rho;
    if (stc_gain) p.gain = *stc_gain;
    return p;
}

void RunConfig::validate() const {
    if (!seed)
        throw std::invalid_argument("config: seed is mandatory (no wall-clock default)");
    if (controller != "esc" && controller != "stc")
        throw std::invalid_argument("config: controller must be esc or stc");
    if (sweep_experiment != "scan" && sweep_experiment != "regain")
        throw std::invalid_argument("config: sweep.experiment must be scan or regain");
    if (!(depth_scale > 0.0) || !(width_scale > 0.0))
        throw std::invalid_argument("config: dip scales must be positive");
    if (ff_after_lines < 1)
        throw std::invalid_argument("config: ff.enabled_after_lines must be >= 1");
    if (ff_window < 1)
        throw std::invalid_argument("config: ff.window_n must be >= 1");
    if (!(omega_pll > 0.0) || sigma_n < 0.0)
        throw std::invalid_argument("config: bad plant parameters");
    scan.validate();
    spectrum.validate();
    if (maps_dir.empty()) sample.validate();
    for (const auto& c : sweep_controllers)
        if (c != "esc" && c != "stc")
            throw std::invalid_argument("config: sweep.controllers entries must be esc or stc");
}

namespace {

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

DipMapMode mode_from_string(const std::string& s) {
    if (s == "shift_neg_only") return DipMapMode::ShiftNegOnly;
    if (s == "split") return DipMapMode::Split;
    throw std::invalid_argument("config: unknown sample.mode " + s);
}

const char* mode_to_string(DipMapMode m) {
    return m == DipMapMode::ShiftNegOnly ? "shift_neg_only" : "split";
}

} // namespace

RunConfig run_config_from_kv(const KeyValueFile& kv) {
    RunConfig c;

    c.maps_dir = kv.get_or("sample.maps_dir", "");
    c.sample.grid_width = static_cast<int>(kv.get_int("sample.grid_width", 64));
    c.sample.grid_height = static_cast<int>(kv.get_int("sample.grid_height", 64));
    c.sample.extent_x = kv.get_double("sample.extent_x", 600.0);
    c.sample.extent_y = kv.get_double("sample.extent_y", 600.0);
    c.sample.random_blobs = static_cast<int>(kv.get_int("sample.random_blobs", 0));
    c.sample.ramp_x_mv_per_ang = kv.get_double("sample.ramp_x_mv_per_ang", 0.0);
    c.sample.ramp_y_mv_per_ang = kv.get_double("sample.ramp_y_mv_per_ang", 0.0);
    c.sample.total_variation_mv = kv.get_double("sample.total_variation_mv", 190.5);
    c.sample.v_neg0 = kv.get_double("sample.v_neg0", -1.3);
    c.sample.delta_v0 = kv.get_double("sample.delta_v0", 5.6);
    c.sample.mode = mode_from_string(kv.get_or("sample.mode", "shift_neg_only"));
    c.sample.split_fraction = kv.get_double("sample.split_fraction", 0.3);
    for (int i = 0;; ++i) {
        std::string key = "sample.blob." + std::to_string(i);
        if (!kv.has(key)) break;
        auto v = kv.get_doubles(key);
        if (v.size() != 5)
            throw std::invalid_argument("config: " + key +
                                        " needs 'cx cy sigma_x sigma_y amp_mv'");
        c.sample.blobs.push_back({v[0], v[1], v[2], v[3], v[4]});
    }

    if (kv.has("spectrum.file"))
        c.spectrum = load_spectrum_file(kv.get("spectrum.file"));
    c.depth_scale = kv.get_double("spectrum.depth_scale", 1.0);
    c.width_scale = kv.get_double("spectrum.width_scale", 1.0);

    c.scan.scan_time_total = kv.get_double("scan.time_total", 1152.0);
    c.scan.lines = static_cast<int>(kv.get_int("scan.lines", 64));
    c.scan.pixels_per_line = static_cast<int>(kv.get_int("scan.pixels_per_line", 64));
    c.scan.back_and_forth = kv.get_int("scan.back_and_forth", 1) != 0;
    c.scan.ts = kv.get_double("scan.ts", 0.005);
    c.scan.speed_profile = kv.get_doubles("scan.speed_profile");

    c.omega_pll = kv.get_double("plant.omega_pll", 10.0);
    c.sigma_n = kv.get_double("plant.sigma_n", 0.03);

    c.controller = kv.get_or("controller", "esc");
    std::string dip = kv.get_or("esc.dip", "");
    if (dip.empty()) dip = kv.get_or("stc.dip", "neg");
    c.dip = dip_from_string(dip);

    c.esc_a_d = kv.get_double("esc.a_d", 1e-3);
    c.esc_omega_d_rel = kv.get_double("esc.omega_d_rel", 4.0);
    c.esc_omega_L_rel = kv.get_double("esc.omega_L_rel", 0.2);
    c.esc_omega_H_rel = kv.get_double("esc.omega_H_rel", 3.0);
    if (kv.has("esc.k")) c.esc_k = kv.get_double("esc.k", 0.0);
    if (kv.has("esc.k_scale")) c.esc_k_scale = kv.get_double("esc.k_scale", 1.0);

    if (kv.has("stc.rho")) c.stc_rho = kv.get_double("stc.rho", 0.0);
    if (kv.has("stc.K")) c.stc_gain = kv.get_double("stc.K", 0.0);

    c.ff_enabled = kv.get_int("ff.enabled", 1) != 0;
    c.ff_after_lines = static_cast<int>(kv.get_int("ff.enabled_after_lines", 1));
    c.ff_window = static_cast<int>(kv.get_int("ff.window_n", 61));

    if (kv.has("seed")) c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));

    c.sweep_scan_times = kv.get_doubles("sweep.scan_times");
    c.sweep_depth_scales = kv.get_doubles("sweep.depth_scales");
    c.sweep_width_scales = kv.get_doubles("sweep.width_scales");
    for (const auto& w : split_words(kv.get_or("sweep.controllers", "")))
        c.sweep_controllers.push_back(w);
    for (const auto& w : split_words(kv.get_or("sweep.ff", ""))) {
        if (w == "on" || w == "1")
            c.sweep_ff.push_back(1);
        else if (w == "off" || w == "0")
            c.sweep_ff.push_back(0);
        else
            throw std::invalid_argument("config: sweep.ff entries must be on/off");
    }
    c.sweep_experiment = kv.get_or("sweep.experiment", "scan");
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_kv(KeyValueFile::load(path));
}

KeyValueFile RunConfig::to_kv() const {
    KeyValueFile kv;
    kv.set("controller", controller);
    kv.set("seed", static_cast<long long>(seed.value_or(0)));

    kv.set("sample.maps_dir", maps_dir);
    kv.set("sample.grid_width", static_cast<long long>(sample.grid_width));
    kv.set("sample.grid_height", static_cast<long long>(sample.grid_height));
    kv.set("sample.extent_x", sample.extent_x);
    kv.set("sample.extent_y", sample.extent_y);
    kv.set("sample.random_blobs", static_cast<long long>(sample.random_blobs));
    kv.set("sample.ramp_x_mv_per_ang", sample.ramp_x_mv_per_ang);
    kv.set("sample.ramp_y_mv_per_ang", sample.ramp_y_mv_per_ang);
    kv.set("sample.total_variation_mv", sample.total_variation_mv);
    kv.set("sample.v_neg0", sample.v_neg0);
    kv.set("sample.delta_v0", sample.delta_v0);
    kv.set("sample.mode", mode_to_string(sample.mode));
    kv.set("sample.split_fraction", sample.split_fraction);
    for (std::size_t i = 0; i < sample.blobs.size(); ++i) {
        const auto& b = sample.blobs[i];
        std::ostringstream ss;
        ss << b.cx << " " << b.cy << " " << b.sigma_x << " " << b.sigma_y << " "
           << b.amp_mv;
        kv.set("sample.blob." + std::to_string(i), ss.str());
    }

    kv.set("spectrum.p1", spectrum.p1);
    kv.set("spectrum.p2", spectrum.p2);
    kv.set("spectrum.p3", spectrum.p3);
    kv.set("spectrum.d_neg", spectrum.d_neg);
    kv.set("spectrum.d_pos", spectrum.d_pos);
    kv.set("spectrum.V_neg", spectrum.V_neg);
    kv.set("spectrum.V_pos", spectrum.V_pos);
    kv.set("spectrum.w_neg", spectrum.w_neg);
    kv.set("spectrum.w_pos", spectrum.w_pos);
    kv.set("spectrum.a1", spectrum.a1);
    kv.set("spectrum.a2", spectrum.a2);
    kv.set("spectrum.a3", spectrum.a3);
    kv.set("spectrum.depth_scale", depth_scale);
    kv.set("spectrum.width_scale", width_scale);

    kv.set("scan.time_total", scan.scan_time_total);
    kv.set("scan.lines", static_cast<long long>(scan.lines));
    kv.set("scan.pixels_per_line", static_cast<long long>(scan.pixels_per_line));
    kv.set("scan.back_and_forth", static_cast<long long>(scan.back_and_forth ? 1 : 0));
    kv.set("scan.ts", scan.ts);
    {
        std::ostringstream ss;
        for (std::size_t i = 0; i < scan.speed_profile.size(); ++i)
            ss << (i ? " " : "") << scan.speed_profile[i];
        kv.set("scan.speed_profile", ss.str());
    }

    kv.set("plant.omega_pll", omega_pll);
    kv.set("plant.sigma_n", sigma_n);

    EscParams esc = resolved_esc();
    kv.set("esc.dip", to_string(dip));
    kv.set("esc.a_d", esc.a_d);
    kv.set("esc.omega_d_rel", esc_omega_d_rel);
    kv.set("esc.omega_L_rel", esc_omega_L_rel);
    kv.set("esc.omega_H_rel", esc_omega_H_rel);
    kv.set("esc.k", esc.k);

    StcParams stc = resolved_stc();
    kv.set("stc.dip", to_string(dip));
    kv.set("stc.rho", stc.rho);
    kv.set("stc.K", stc.gain);

    kv.set("ff.enabled", static_cast<long long>(ff_enabled ? 1 : 0));
    kv.set("ff.enabled_after_lines", static_cast<long long>(ff_after_lines));
    kv.set("ff.window_n", static_cast<long long>(ff_window));
    return kv;
}

} // namespace sqdm
