#include "sqdm/esc.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace sqdm {

namespace {

std::complex<double> chain_response(double omega_d, double omega_pll, double omega_H) {
    const std::complex<double> iw(0.0, omega_d);
    std::complex<double> g_pll = omega_pll / (iw + omega_pll);
    std::complex<double> g_hp = iw / (iw + omega_H);
    return g_pll * g_hp;
}

} // namespace

EscParams esc_defaults(DipSelector dip, double omega_pll) {
    EscParams p;
    p.dip = dip;
    p.a_d = 1e-3;
    p.omega_d = 4.0 * omega_pll;
    p.omega_L = 0.2 * p.omega_d;
    p.omega_H = 3.0 * p.omega_d;
    p.k = dip == DipSelector::Negative ? -5e-5 : -6e-5;
    return p;
}

double phase_compensation(double omega_d, double omega_pll, double omega_H) {
    if (!(omega_d > 0.0) || !(omega_pll > 0.0) || !(omega_H > 0.0))
        throw std::invalid_argument("phase_compensation: frequencies must be positive");
    return std::arg(chain_response(omega_d, omega_pll, omega_H));
}

double compensated_gain(double k, double omega_d, double omega_pll, double omega_H) {
    if (!(omega_d > 0.0) || !(omega_pll > 0.0) || !(omega_H > 0.0))
        throw std::invalid_argument("compensated_gain: frequencies must be positive");
    return k / std::abs(chain_response(omega_d, omega_pll, omega_H));
}

std::vector<std::string> validate_esc(const EscParams& params,
                                      const SpectrumParams& spectrum,
                                      double omega_pll) {
    std::vector<std::string> violations;
    double w = spectrum.dip_width(params.dip);
    if (params.a_d > w)
        violations.push_back("dither amplitude a_d exceeds the dip width");
    if (params.omega_d < 2.0 * omega_pll || params.omega_d > 10.0 * omega_pll)
        violations.push_back("dither frequency omega_d outside [2, 10] * omega_pll");
    if (params.omega_L < 0.1 * params.omega_d || params.omega_L > 0.5 * params.omega_d)
        violations.push_back("low-pass cutoff omega_L outside [0.1, 0.5] * omega_d");
    if (params.omega_H < 0.5 * params.omega_d)
        violations.push_back("high-pass cutoff omega_H below 0.5 * omega_d");
    return violations;
}

EscController::EscController(const EscParams& params, double omega_pll, double ts)
    : params_(params), ts_(ts) {
    if (!(ts > 0.0)) throw std::invalid_argument("EscController: ts must be positive");
    if (!(params.a_d > 0.0))
        throw std::invalid_argument("EscController: dither amplitude must be positive");
    phi_ = phase_compensation(params.omega_d, omega_pll, params.omega_H);
    comp_mag_ = std::abs(chain_response(params.omega_d, omega_pll, params.omega_H));
    k_esc_ = params.k / comp_mag_;
    alpha_lp_ = std::exp(-params.omega_L * ts);
    alpha_hp_ = std::exp(-params.omega_H * ts);
    // zero at DC; gain matched to the analog response at high frequency
    gain_hp_ = 0.5 * (1.0 + alpha_hp_);
}

EscController::Output EscController::step(double df_meas, double t) {
    Output out;
    if (!std::isfinite(df_meas)) {
        // freeze: keep all states, report the fault
        faulted_ = true;
        out.fault = true;
        out.v_b_c = integrator_;
        out.dither = params_.a_d * std::sin(dither_phase_);
        out.xi1 = hp_y_;
        out.xi2 = lp_y_;
        out.xi3 = (-2.0 / (params_.a_d * params_.a_d)) * lp_y_;
        out.slope_estimate = -out.xi3 / comp_mag_;
        return out;
    }

    if (!hp_primed_) {
        hp_x_prev_ = df_meas;
        hp_primed_ = true;
    }
    hp_y_ = alpha_hp_ * hp_y_ + gain_hp_ * (df_meas - hp_x_prev_);
    hp_x_prev_ = df_meas;

    // dither_phase_ still holds the phase of the dither that produced this
    // measurement (one-sample transport through the plant)
    double demod_ref = params_.a_d * std::sin(dither_phase_ + phi_);
    lp_y_ = alpha_lp_ * lp_y_ + (1.0 - alpha_lp_) * (hp_y_ * demod_ref);

    double xi3 = (-2.0 / (params_.a_d * params_.a_d)) * lp_y_;
    // e_d = slope estimate - slope reference(=0); negative k descends
    integrator_ += ts_ * k_esc_ * (-xi3);

    double phase = std::fmod(params_.omega_d * t, 2.0 * M_PI);
    if (phase < 0.0) phase += 2.0 * M_PI;
    dither_phase_ = phase;

    out.v_b_c = integrator_;
    out.dither = params_.a_d * std::sin(phase);
    out.xi1 = hp_y_;
    out.xi2 = lp_y_;
    out.xi3 = xi3;
    out.slope_estimate = -xi3 / comp_mag_;
    out.fault = false;
    return out;
}

} // namespace sqdm
