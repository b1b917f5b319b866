#ifndef SQDM_SPECTRUM_HPP
#define SQDM_SPECTRUM_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace sqdm {

/// Which charging dip of the spectrum a controller tracks. Only one dip can
/// be tracked at a time; a full potential image needs one run per dip.
enum class DipSelector { Negative, Positive };

const char* to_string(DipSelector dip);
DipSelector dip_from_string(const std::string& s);

/// Analytic frequency-shift spectrum df(V_b): a capacitance parabola
///   p1*V^2 + p2*V + p3
/// plus two dips,
///   d_neg * exp(-((V - V_neg)/w_neg)^2)
///   d_pos * exp(-g((V - V_pos)/w_pos)),  g(x) = a1 x^2 + a2 x^4 + a3 x^6.
/// Depths are negative (dips), widths positive, V_neg < V_pos.
struct SpectrumParams {
    double p1 = -1.3;   // Hz/V^2
    double p2 = 0.56;   // Hz/V
    double p3 = -0.76;  // Hz
    double d_neg = -1.1;   // Hz
    double d_pos = -4.6;   // Hz
    double V_neg = -1.3;   // V
    double V_pos = 4.3;    // V
    double w_neg = 0.022;  // V
    double w_pos = 0.087;  // V
    double a1 = 0.70;
    double a2 = -0.61;
    double a3 = 1.64;

    double dip_depth(DipSelector dip) const { return dip == DipSelector::Negative ? d_neg : d_pos; }
    double dip_position(DipSelector dip) const { return dip == DipSelector::Negative ? V_neg : V_pos; }
    double dip_width(DipSelector dip) const { return dip == DipSelector::Negative ? w_neg : w_pos; }

    /// Throws std::invalid_argument when widths are non-positive, depths
    /// non-negative, or the dips are out of order.
    void validate() const;
};

/// df(V_b) in Hz. Total function: the exponents underflow cleanly far from
/// the dip centers.
double eval_spectrum(const SpectrumParams& params, double v_b);

/// Closed-form derivative d(df)/dV_b in Hz/V.
double eval_derivative(const SpectrumParams& params, double v_b);

/// Argmin of the full spectrum restricted to the selected dip's window
/// [V -/+ 2w]. Located by bisecting the sign change of eval_derivative;
/// the result is within 1e-9 V of the stationary point. Throws
/// std::invalid_argument when the selected dip has zero depth.
double true_dip_minimum(const SpectrumParams& params, DipSelector dip);

struct FitResult {
    SpectrumParams params;
    bool converged = false;
    int iterations = 0;
    double residual_norm = 0.0;  // sqrt(sum of squared residuals), Hz
};

/// Least-squares fit of all twelve spectrum parameters to (V_b, df) samples.
/// Damped Gauss-Newton with a numeric Jacobian; dip centers are re-seeded
/// from the data before the iteration so the narrow dips are found even when
/// the initial positions are several widths off. The returned parameters
/// never have a larger residual norm than `init`. Non-convergence is
/// reported through `converged`/`iterations`, not an exception.
FitResult fit_spectrum(const std::vector<std::pair<double, double>>& samples,
                       const SpectrumParams& init, int max_iterations = 200);

/// Flat `name = value` serialization, keys matching the field names.
void save_spectrum(std::ostream& out, const SpectrumParams& params);
void save_spectrum_file(const std::string& path, const SpectrumParams& params);
SpectrumParams load_spectrum(std::istream& in);
SpectrumParams load_spectrum_file(const std::string& path);

} // namespace sqdm

#endif
