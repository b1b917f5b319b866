#ifndef SQDM_ESC_HPP
#define SQDM_ESC_HPP

#include <string>
#include <vector>

#include "sqdm/spectrum.hpp"

namespace sqdm {

/// Extremum seeking controller parameters. Frequencies are absolute (rad/s);
/// config files express them relative to the PLL bandwidth / dither.
///
/// Sign convention: the integrator is driven by the slope estimate, so a
/// negative gain k descends the gradient toward the dip minimum. The stock
/// gains are k = -5e-5 (negative dip) and k = -6e-5 (positive dip).
struct EscParams {
    double a_d = 1e-3;    // V, dither amplitude
    double omega_d = 40.0;  // rad/s
    double omega_L = 8.0;   // rad/s, low-pass cutoff
    double omega_H = 120.0; // rad/s, high-pass cutoff
    double k = -5e-5;       // tunable gain (signed)
    DipSelector dip = DipSelector::Negative;
};

EscParams esc_defaults(DipSelector dip, double omega_pll = 10.0);

/// Phase of PLL and high-pass at the dither frequency,
/// arg(G_PLL(i*w_d) * G_HP(i*w_d)); the demodulating dither is shifted by
/// this much to stay in phase with the filtered measurement.
double phase_compensation(double omega_d, double omega_pll, double omega_H);

/// Gain compensated for the amplitude loss through PLL and high-pass at the
/// dither frequency: K_ESC = k / |G_PLL(i*w_d) * G_HP(i*w_d)|. The low-pass
/// is left out so its cutoff can be retuned without changing the loop gain.
double compensated_gain(double k, double omega_d, double omega_pll, double omega_H);

/// Checks the four tuning guidelines; returns one message per violation.
std::vector<std::string> validate_esc(const EscParams& params,
                                      const SpectrumParams& spectrum,
                                      double omega_pll);

/// Dither-demodulation extremum seeker. Per sample:
///   xi1 = HP(df_meas)
///   xi2 = LP(xi1 * a_d*sin(w_d*t_prev + phi))
///   xi3 = (-2/a_d^2) * xi2            (tends to the negative slope)
///   integrator += ts * K_ESC * (-xi3)
/// and the new dither a_d*sin(w_d*t) is returned separately so the bias used
/// for imaging stays dither-free. Demodulation uses the previous step's
/// dither phase: the measurement arriving now was produced by the dither
/// sent one sample ago. Filters are pole-matched at ts.
class EscController {
  public:
    EscController(const EscParams& params, double omega_pll, double ts);

    struct Output {
        double v_b_c = 0.0;    // V, feedback part of the bias
        double dither = 0.0;   // V, add to the plant input only
        double xi1 = 0.0;      // Hz
        double xi2 = 0.0;      // Hz
        double xi3 = 0.0;      // Hz/V scaled, raw slope signal
        double slope_estimate = 0.0;  // Hz/V, xi3 compensated back to -df'
        bool fault = false;
    };

    /// One controller update at time t with the latest measurement.
    Output step(double df_meas, double t);

    void set_integrator(double v_b) { integrator_ = v_b; }
    double integrator() const { return integrator_; }
    double dither_phase() const { return dither_phase_; }
    double phase() const { return phi_; }
    double gain() const { return k_esc_; }
    /// |G_PLL * G_HP| at the dither frequency.
    double compensation_magnitude() const { return comp_mag_; }
    bool faulted() const { return faulted_; }
    const EscParams& params() const { return params_; }

  private:
    EscParams params_;
    double ts_;
    double phi_;
    double comp_mag_;
    double k_esc_;
    double alpha_lp_;
    double alpha_hp_;
    double gain_hp_;
    double hp_y_ = 0.0;
    double hp_x_prev_ = 0.0;
    bool hp_primed_ = false;
    double lp_y_ = 0.0;
    double integrator_ = 0.0;
    double dither_phase_ = 0.0;
    bool faulted_ = false;
};

} // namespace sqdm

#endif
