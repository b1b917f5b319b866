#ifndef SQDM_PLANT_HPP
#define SQDM_PLANT_HPP

#include <cstdint>
#include <vector>

#include "sqdm/grid.hpp"
#include "sqdm/rng.hpp"
#include "sqdm/spectrum.hpp"

namespace sqdm {

/// Per-pixel ground-truth dip positions driving the simulated sample.
struct DipMaps {
    Grid v_neg;
    Grid v_pos;
    double extent_x = 0.0;  // Angstrom
    double extent_y = 0.0;  // Angstrom

    int width() const { return v_neg.width; }
    int height() const { return v_neg.height; }

    /// Same-shape grids, finite values, v_neg < v_pos pointwise.
    void validate() const;
};

enum class ScanDirection { Forward, Backward };

/// Raster-scan timing. The fast axis is x; with `back_and_forth` each line is
/// swept forward then backward before y steps, so a single pass takes
/// scan_time_total / (lines * 2).
struct ScanConfig {
    double scan_time_total = 1152.0;  // s
    int lines = 64;
    int pixels_per_line = 64;
    bool back_and_forth = true;
    double ts = 0.005;  // s
    /// Optional relative speed multipliers over equal-x segments of a pass.
    /// The pass duration is fixed; multipliers redistribute time within it.
    std::vector<double> speed_profile;

    void validate() const;
    double line_time() const { return scan_time_total / lines; }
    double pass_time() const { return back_and_forth ? line_time() / 2.0 : line_time(); }
};

struct TrajectoryPoint {
    double x = 0.0;  // Angstrom
    double y = 0.0;
    int line = 0;
    int pixel_x = 0;
    ScanDirection direction = ScanDirection::Forward;
};

/// Tip position at time t for a raster scan over extent_x * extent_y.
/// Throws std::out_of_range for t outside [0, scan_time_total].
TrajectoryPoint trajectory_position(const ScanConfig& cfg, double extent_x,
                                    double extent_y, double t);

/// Stepwise nearest-pixel lookup of the local dip positions. Positions are
/// valid over [0, extent] on both axes; outside throws std::out_of_range.
std::pair<double, double> map_lookup(const DipMaps& maps, double x, double y);

/// Discrete-time SQDM plant: spectrum with per-pixel shifted dips, tip moving
/// along the raster trajectory, first-order PLL on the frequency shift, and
/// white Gaussian noise on the PLL output. Exact pole-mapped PLL update:
///   y+ = alpha*y + (1-alpha)*df_static,  alpha = exp(-omega_pll*ts).
/// Single-owner; step sequentially. Independent instances are unrelated.
class Plant {
  public:
    Plant(SpectrumParams spectrum, DipMaps maps, ScanConfig scan,
          double omega_pll, double sigma_n, std::uint64_t seed);

    struct Output {
        double df_meas = 0.0;  // Hz, PLL output + noise
        double t = 0.0;        // s, time after the step
        TrajectoryPoint pos;   // tip position after the step
        double v_neg_local = 0.0;  // dip positions at that pixel
        double v_pos_local = 0.0;
    };

    /// Advance one sample period with bias v_b_mod applied (controller output
    /// + dither + feedforward).
    Output step(double v_b_mod);

    /// Settle the PLL state to the static spectrum value at the current
    /// position for the given bias, as if the loop had been closed long
    /// before the scan starts.
    void prime(double v_b);

    double time() const { return t_; }
    double pll_state() const { return pll_y_; }
    const DipMaps& maps() const { return maps_; }
    const ScanConfig& scan() const { return scan_; }
    const SpectrumParams& spectrum() const { return spectrum_; }
    double omega_pll() const { return omega_pll_; }
    double sigma_n() const { return sigma_n_; }

    /// Spectrum with the dips moved to the map values at (x, y).
    SpectrumParams local_spectrum(double x, double y) const;

  private:
    SpectrumParams spectrum_;
    DipMaps maps_;
    ScanConfig scan_;
    double omega_pll_;
    double sigma_n_;
    double alpha_;
    double pll_y_ = 0.0;
    double t_ = 0.0;
    GaussianRng noise_;
};

} // namespace sqdm

#endif
