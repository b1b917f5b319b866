#ifndef SQDM_STC_HPP
#define SQDM_STC_HPP

#include "sqdm/spectrum.hpp"

namespace sqdm {

/// Slope tracking controller parameters. The reference is a frequency-shift
/// value on the dip's inner slope (right slope of the negative dip, left
/// slope of the positive one), picked via the depth fraction rho. Gains have
/// opposite signs for the two dips because the inner slopes do.
struct StcParams {
    double delta_f_ref = 0.0;  // Hz, absolute reference
    double gain = 0.04;        // V/(Hz*s) scaled integral gain, signed
    DipSelector dip = DipSelector::Negative;
    double rho = 0.63;         // depth fraction used by pick_reference
};

StcParams stc_defaults(DipSelector dip);

struct ReferencePoint {
    double delta_f_ref = 0.0;  // Hz, full spectrum value at the point
    double v_b_at_ref = 0.0;   // V
};

/// Point on the inner slope where the dip component alone has magnitude
/// rho * |depth|. Strictly between the dip minimum and the dip edge.
/// Throws std::invalid_argument for zero depth or rho outside (0.02, 0.98).
ReferencePoint pick_reference(const SpectrumParams& params, DipSelector dip, double rho);

/// Offset between the bias tracked by the STC and the true dip minimum,
/// |v_b(delta_f_ref) - argmin|, for a reference on the inner slope.
/// Throws std::invalid_argument when delta_f_ref is not reachable there.
double systematic_error(const SpectrumParams& params, DipSelector dip, double delta_f_ref);

/// Integral controller regulating df to the reference:
///   e_f = delta_f_ref - df_meas;  integrator += ts * gain * e_f.
class StcController {
  public:
    StcController(const StcParams& params, double ts);

    struct Output {
        double v_b_c = 0.0;
        double e_f = 0.0;  // Hz
        bool fault = false;
    };

    Output step(double df_meas);

    void set_integrator(double v_b) { integrator_ = v_b; }
    double integrator() const { return integrator_; }
    double last_error() const { return last_error_; }
    bool faulted() const { return faulted_; }
    const StcParams& params() const { return params_; }

  private:
    StcParams params_;
    double ts_;
    double integrator_ = 0.0;
    double last_error_ = 0.0;
    bool faulted_ = false;
};

} // namespace sqdm

#endif
