#include "sqdm/plant.hpp"

#include <cmath>
#include <stdexcept>

namespace sqdm {

void DipMaps::validate() const {
    if (!v_neg.same_shape(v_pos))
        throw std::invalid_argument("DipMaps: grids must have the same shape");
    if (v_neg.width <= 0 || v_neg.height <= 0)
        throw std::invalid_argument("DipMaps: empty grids");
    if (!(extent_x > 0.0) || !(extent_y > 0.0))
        throw std::invalid_argument("DipMaps: extents must be positive");
    for (std::size_t i = 0; i < v_neg.data.size(); ++i) {
        double n = v_neg.data[i], p = v_pos.data[i];
        if (!std::isfinite(n) || !std::isfinite(p))
            throw std::invalid_argument("DipMaps: non-finite map value");
        if (!(n < p))
            throw std::invalid_argument("DipMaps: v_neg must be below v_pos everywhere");
    }
}

void ScanConfig::validate() const {
    if (!(ts > 0.0)) throw std::invalid_argument("ScanConfig: ts must be positive");
    if (!(scan_time_total > 0.0))
        throw std::invalid_argument("ScanConfig: scan_time_total must be positive");
    if (lines <= 0 || pixels_per_line <= 0)
        throw std::invalid_argument("ScanConfig: lines/pixels_per_line must be positive");
    for (double m : speed_profile)
        if (!(m > 0.0))
            throw std::invalid_argument("ScanConfig: speed multipliers must be positive");
}

namespace {

// Fraction of the x extent covered after a fraction `tau` of the pass time,
// for piecewise-constant speed over equal-x segments.
double profile_fraction(const std::vector<double>& profile, double tau) {
    if (profile.empty()) return tau;
    const int n = static_cast<int>(profile.size());
    // time share of each segment is proportional to 1/multiplier
    double total = 0.0;
    for (double m : profile) total += 1.0 / m;
    double target = tau * total;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        double tj = 1.0 / profile[j];
        if (target <= acc + tj || j == n - 1) {
            double within = (target - acc) / tj;
            return (j + std::min(std::max(within, 0.0), 1.0)) / n;
        }
        acc += tj;
    }
    return 1.0;
}

} // namespace

TrajectoryPoint trajectory_position(const ScanConfig& cfg, double extent_x,
                                    double extent_y, double t) {
    const double eps = 1e-9 * cfg.scan_time_total;
    if (t < -eps || t > cfg.scan_time_total + eps)
        throw std::out_of_range("trajectory_position: t outside the scan");
    t = std::min(std::max(t, 0.0), cfg.scan_time_total);

    double line_time = cfg.line_time();
    int line = std::min(static_cast<int>(t / line_time), cfg.lines - 1);
    double tau_line = t - line * line_time;

    double pass_time = cfg.pass_time();
    int pass = 0;
    if (cfg.back_and_forth) {
        pass = std::min(static_cast<int>(tau_line / pass_time), 1);
    }
    double s = tau_line - pass * pass_time;

    double u = profile_fraction(cfg.speed_profile, std::min(s / pass_time, 1.0));

    TrajectoryPoint p;
    p.line = line;
    p.direction = pass == 0 ? ScanDirection::Forward : ScanDirection::Backward;
    p.x = (pass == 0 ? u : 1.0 - u) * extent_x;
    p.y = (line + 0.5) * extent_y / cfg.lines;
    double dx = extent_x / cfg.pixels_per_line;
    p.pixel_x = std::min(static_cast<int>(p.x / dx), cfg.pixels_per_line - 1);
    return p;
}

std::pair<double, double> map_lookup(const DipMaps& maps, double x, double y) {
    if (x < 0.0 || x > maps.extent_x || y < 0.0 || y > maps.extent_y)
        throw std::out_of_range("map_lookup: position outside the sample extent");
    double dx = maps.extent_x / maps.width();
    double dy = maps.extent_y / maps.height();
    int ix = std::min(static_cast<int>(x / dx), maps.width() - 1);
    int iy = std::min(static_cast<int>(y / dy), maps.height() - 1);
    return {maps.v_neg.at(ix, iy), maps.v_pos.at(ix, iy)};
}

Plant::Plant(SpectrumParams spectrum, DipMaps maps, ScanConfig scan,
             double omega_pll, double sigma_n, std::uint64_t seed)
    : spectrum_(spectrum),
      maps_(std::move(maps)),
      scan_(scan),
      omega_pll_(omega_pll),
      sigma_n_(sigma_n),
      noise_(seed) {
    spectrum_.validate();
    maps_.validate();
    scan_.validate();
    if (!(omega_pll > 0.0))
        throw std::invalid_argument("Plant: omega_pll must be positive");
    if (sigma_n < 0.0)
        throw std::invalid_argument("Plant: sigma_n must be >= 0");
    alpha_ = std::exp(-omega_pll_ * scan_.ts);
}

SpectrumParams Plant::local_spectrum(double x, double y) const {
    auto [vn, vp] = map_lookup(maps_, x, y);
    SpectrumParams local = spectrum_;
    local.V_neg = vn;
    local.V_pos = vp;
    return local;
}

void Plant::prime(double v_b) {
    TrajectoryPoint pos = trajectory_position(scan_, maps_.extent_x, maps_.extent_y, t_);
    pll_y_ = eval_spectrum(local_spectrum(pos.x, pos.y), v_b);
}

Plant::Output Plant::step(double v_b_mod) {
    if (!std::isfinite(v_b_mod))
        throw std::invalid_argument("Plant::step: non-finite bias");
    t_ += scan_.ts;
    TrajectoryPoint pos = trajectory_position(scan_, maps_.extent_x, maps_.extent_y, t_);
    auto [vn, vp] = map_lookup(maps_, pos.x, pos.y);
    SpectrumParams local = spectrum_;
    local.V_neg = vn;
    local.V_pos = vp;
    double df_static = eval_spectrum(local, v_b_mod);
    pll_y_ = alpha_ * pll_y_ + (1.0 - alpha_) * df_static;

    Output out;
    out.t = t_;
    out.pos = pos;
    out.v_neg_local = vn;
    out.v_pos_local = vp;
    out.df_meas = pll_y_ + (sigma_n_ > 0.0 ? noise_.next(0.0, sigma_n_) : 0.0);
    return out;
}

} // namespace sqdm
