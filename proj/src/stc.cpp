#include "sqdm/stc.hpp"

#include <cmath>
#include <stdexcept>

namespace sqdm {

StcParams stc_defaults(DipSelector dip) {
    StcParams p;
    p.dip = dip;
    if (dip == DipSelector::Negative) {
        p.gain = 0.04;
        p.rho = 0.63;
    } else {
        p.gain = -0.003;
        p.rho = 0.59;
    }
    p.delta_f_ref = 0.0;  // resolved against a spectrum via pick_reference
    return p;
}

namespace {

// |dip component| at offset `u` widths from the center, relative to |depth|.
double dip_shape(const SpectrumParams& p, DipSelector dip, double u) {
    if (dip == DipSelector::Negative) return std::exp(-u * u);
    double x2 = u * u;
    return std::exp(-(x2 * (p.a1 + x2 * (p.a2 + x2 * p.a3))));
}

} // namespace

ReferencePoint pick_reference(const SpectrumParams& params, DipSelector dip, double rho) {
    params.validate();
    if (params.dip_depth(dip) == 0.0)
        throw std::invalid_argument("pick_reference: selected dip has zero depth");
    if (!(rho > 0.01) || !(rho < 0.99))
        throw std::invalid_argument(
            "pick_reference: rho must stay clear of the dip minimum and the flat tail");

    // Solve |dip(u)| = rho * |depth| on the inner side; the shape decays
    // monotonically from 1 at the center, so bisection over u in [0, 3].
    double lo = 0.0, hi = 3.0;
    if (dip_shape(params, dip, hi) > rho)
        throw std::invalid_argument("pick_reference: dip shape does not decay to rho");
    for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
        double mid = 0.5 * (lo + hi);
        if (dip_shape(params, dip, mid) > rho)
            lo = mid;
        else
            hi = mid;
    }
    double u = 0.5 * (lo + hi);

    // inner slope: right of the negative dip, left of the positive dip
    double center = params.dip_position(dip);
    double width = params.dip_width(dip);
    ReferencePoint ref;
    ref.v_b_at_ref = dip == DipSelector::Negative ? center + u * width
                                                  : center - u * width;
    ref.delta_f_ref = eval_spectrum(params, ref.v_b_at_ref);
    return ref;
}

double systematic_error(const SpectrumParams& params, DipSelector dip, double delta_f_ref) {
    double v_min = true_dip_minimum(params, dip);
    double width = params.dip_width(dip);
    // inner-slope bracket: from the minimum out to 2.5 widths
    double outer = dip == DipSelector::Negative ? v_min + 2.5 * width
                                                : v_min - 2.5 * width;
    double f_min = eval_spectrum(params, v_min);
    double f_outer = eval_spectrum(params, outer);
    if (!(delta_f_ref > f_min) || !(delta_f_ref < f_outer))
        throw std::invalid_argument("systematic_error: reference not reachable on the inner slope");

    double lo = v_min, hi = outer;
    for (int i = 0; i < 200 && std::abs(hi - lo) > 1e-14; ++i) {
        double mid = 0.5 * (lo + hi);
        if (eval_spectrum(params, mid) < delta_f_ref)
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(0.5 * (lo + hi) - v_min);
}

StcController::StcController(const StcParams& params, double ts)
    : params_(params), ts_(ts) {
    if (!(ts > 0.0)) throw std::invalid_argument("StcController: ts must be positive");
}

StcController::Output StcController::step(double df_meas) {
    Output out;
    if (!std::isfinite(df_meas)) {
        faulted_ = true;
        out.fault = true;
        out.v_b_c = integrator_;
        out.e_f = last_error_;
        return out;
    }
    double e_f = params_.delta_f_ref - df_meas;
    integrator_ += ts_ * params_.gain * e_f;
    last_error_ = e_f;
    out.v_b_c = integrator_;
    out.e_f = e_f;
    return out;
}

} // namespace sqdm
