#include "sqdm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sqdm {

const char* to_string(DipSelector dip) {
    return dip == DipSelector::Negative ? "neg" : "pos";
}

DipSelector dip_from_string(const std::string& s) {
    if (s == "neg" || s == "negative") return DipSelector::Negative;
    if (s == "pos" || s == "positive") return DipSelector::Positive;
    throw std::invalid_argument("unknown dip selector: " + s);
}

void SpectrumParams::validate() const {
    if (!(w_neg > 0.0) || !(w_pos > 0.0))
        throw std::invalid_argument("spectrum: dip widths must be positive");
    if (d_neg > 0.0 || d_pos > 0.0)
        throw std::invalid_argument("spectrum: dip depths must be <= 0");
    if (!(V_neg < V_pos))
        throw std::invalid_argument("spectrum: V_neg must be below V_pos");
}

namespace {

double poly_g(const SpectrumParams& p, double x) {
    double x2 = x * x;
    return x2 * (p.a1 + x2 * (p.a2 + x2 * p.a3));
}

double poly_g_prime(const SpectrumParams& p, double x) {
    double x2 = x * x;
    return x * (2.0 * p.a1 + x2 * (4.0 * p.a2 + x2 * 6.0 * p.a3));
}

double dip_neg(const SpectrumParams& p, double v) {
    double u = (v - p.V_neg) / p.w_neg;
    return p.d_neg * std::exp(-u * u);
}

double dip_pos(const SpectrumParams& p, double v) {
    double x = (v - p.V_pos) / p.w_pos;
    return p.d_pos * std::exp(-poly_g(p, x));
}

} // namespace

double eval_spectrum(const SpectrumParams& p, double v_b) {
    double parabola = (p.p1 * v_b + p.p2) * v_b + p.p3;
    return parabola + dip_neg(p, v_b) + dip_pos(p, v_b);
}

double eval_derivative(const SpectrumParams& p, double v_b) {
    double d = 2.0 * p.p1 * v_b + p.p2;
    double u = (v_b - p.V_neg) / p.w_neg;
    d += dip_neg(p, v_b) * (-2.0 * u / p.w_neg);
    double x = (v_b - p.V_pos) / p.w_pos;
    d += dip_pos(p, v_b) * (-poly_g_prime(p, x) / p.w_pos);
    return d;
}

double true_dip_minimum(const SpectrumParams& params, DipSelector dip) {
    if (params.dip_depth(dip) == 0.0)
        throw std::invalid_argument("true_dip_minimum: selected dip has zero depth");
    double center = params.dip_position(dip);
    double width = params.dip_width(dip);
    double lo = center - 2.0 * width;
    double hi = center + 2.0 * width;

    // Bracket the derivative sign change on a fine grid, then bisect.
    const int kGridPoints = 400;
    double step = (hi - lo) / kGridPoints;
    double a = lo;
    double fa = eval_derivative(params, a);
    double best_a = std::numeric_limits<double>::quiet_NaN();
    double best_b = 0.0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= kGridPoints; ++i) {
        double b = lo + i * step;
        double fb = eval_derivative(params, b);
        if (fa <= 0.0 && fb >= 0.0) {
            // minimum candidate: keep the bracket with the lowest value
            double mid_val = eval_spectrum(params, 0.5 * (a + b));
            if (mid_val < best_val) {
                best_val = mid_val;
                best_a = a;
                best_b = b;
            }
        }
        a = b;
        fa = fb;
    }
    if (!std::isfinite(best_a))
        throw std::invalid_argument("true_dip_minimum: no interior minimum in dip window");

    double x0 = best_a, x1 = best_b;
    for (int iter = 0; iter < 200 && (x1 - x0) > 1e-12; ++iter) {
        double m = 0.5 * (x0 + x1);
        if (eval_derivative(params, m) < 0.0)
            x0 = m;
        else
            x1 = m;
    }
    return 0.5 * (x0 + x1);
}

// ---------------------------------------------------------------------------
// Gauss-Newton fit

namespace {

constexpr int kNumParams = 12;

void pack(const SpectrumParams& p, double* v) {
    v[0] = p.p1; v[1] = p.p2; v[2] = p.p3;
    v[3] = p.d_neg; v[4] = p.d_pos;
    v[5] = p.V_neg; v[6] = p.V_pos;
    v[7] = p.w_neg; v[8] = p.w_pos;
    v[9] = p.a1; v[10] = p.a2; v[11] = p.a3;
}

SpectrumParams unpack(const double* v) {
    SpectrumParams p;
    p.p1 = v[0]; p.p2 = v[1]; p.p3 = v[2];
    p.d_neg = v[3]; p.d_pos = v[4];
    p.V_neg = v[5]; p.V_pos = v[6];
    p.w_neg = v[7]; p.w_pos = v[8];
    p.a1 = v[9]; p.a2 = v[10]; p.a3 = v[11];
    return p;
}

double residual_norm2(const std::vector<std::pair<double, double>>& samples,
                      const SpectrumParams& p) {
    double s = 0.0;
    for (const auto& [v, y] : samples) {
        double r = eval_spectrum(p, v) - y;
        s += r * r;
    }
    return s;
}

// Solve (A + lambda*diag(A)) x = b in-place; A is n x n symmetric positive
// semi-definite (normal equations). Plain Gaussian elimination with partial
// pivoting is plenty for 12 unknowns.
bool solve_damped(std::vector<double> A, std::vector<double> b, double lambda,
                  int n, std::vector<double>& x) {
    for (int i = 0; i < n; ++i) {
        double d = A[i * n + i];
        A[i * n + i] = d + lambda * std::max(d, 1e-12);
    }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
        if (std::abs(A[piv * n + col]) < 1e-300) return false;
        if (piv != col) {
            for (int c = col; c < n; ++c) std::swap(A[piv * n + c], A[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            double f = A[r * n + col] / A[col * n + col];
            for (int c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= A[r * n + c] * x[c];
        x[r] = s / A[r * n + r];
    }
    return true;
}

// Re-seed the parabola and dip centers from the data: fit the parabola alone
// by linear least squares, then place each dip at the most negative residual
// on its side of the spectrum. Makes the fit robust to inits that are several
// dip widths off. Dips whose residual prominence is negligible keep the
// caller's values (and a zero depth keeps its shape parameters pinned).
SpectrumParams reseed_from_data(const std::vector<std::pair<double, double>>& samples,
                                const SpectrumParams& init) {
    double sxx[5] = {0, 0, 0, 0, 0};
    double sxy[3] = {0, 0, 0};
    double y_lo = samples.front().second, y_hi = y_lo;
    for (const auto& [v, y] : samples) {
        double v2 = v * v;
        sxx[0] += 1.0; sxx[1] += v; sxx[2] += v2; sxx[3] += v2 * v; sxx[4] += v2 * v2;
        sxy[0] += y; sxy[1] += v * y; sxy[2] += v2 * y;
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
    }
    std::vector<double> A = {sxx[4], sxx[3], sxx[2],
                             sxx[3], sxx[2], sxx[1],
                             sxx[2], sxx[1], sxx[0]};
    std::vector<double> b = {sxy[2], sxy[1], sxy[0]};
    std::vector<double> coef;
    if (!solve_damped(A, b, 0.0, 3, coef)) return init;

    SpectrumParams seeded = init;
    seeded.p1 = coef[0];
    seeded.p2 = coef[1];
    seeded.p3 = coef[2];

    double split = 0.5 * (init.V_neg + init.V_pos);
    double min_neg = 0.0, min_pos = 0.0;
    double at_neg = init.V_neg, at_pos = init.V_pos;
    for (const auto& [v, y] : samples) {
        double r = y - ((coef[0] * v + coef[1]) * v + coef[2]);
        if (v < split) {
            if (r < min_neg) { min_neg = r; at_neg = v; }
        } else {
            if (r < min_pos) { min_pos = r; at_pos = v; }
        }
    }
    double prominence_floor = 1e-4 * std::max(y_hi - y_lo, 1e-9);
    if (min_neg < -prominence_floor) {
        seeded.V_neg = at_neg;
        seeded.d_neg = min_neg;
    }
    if (min_pos < -prominence_floor) {
        seeded.V_pos = at_pos;
        seeded.d_pos = min_pos;
    }
    return seeded;
}

} // namespace

FitResult fit_spectrum(const std::vector<std::pair<double, double>>& samples,
                       const SpectrumParams& init, int max_iterations) {
    if (samples.size() < kNumParams)
        throw std::invalid_argument("fit_spectrum: need at least 12 samples");

    const int m = static_cast<int>(samples.size());
    SpectrumParams cur = reseed_from_data(samples, init);
    if (residual_norm2(samples, init) < residual_norm2(samples, cur))
        cur = init;

    double theta[kNumParams];
    pack(cur, theta);
    double cost = residual_norm2(samples, cur);
    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;

    std::vector<double> jac(static_cast<std::size_t>(m) * kNumParams);
    std::vector<double> res(m);

    for (; iter < max_iterations; ++iter) {
        SpectrumParams p = unpack(theta);
        for (int i = 0; i < m; ++i)
            res[i] = eval_spectrum(p, samples[i].first) - samples[i].second;

        // forward-difference Jacobian
        for (int j = 0; j < kNumParams; ++j) {
            double h = 1e-7 * std::max(1e-2, std::abs(theta[j]));
            double saved = theta[j];
            theta[j] = saved + h;
            SpectrumParams pj = unpack(theta);
            theta[j] = saved;
            for (int i = 0; i < m; ++i) {
                double f = eval_spectrum(pj, samples[i].first);
                jac[static_cast<std::size_t>(i) * kNumParams + j] =
                    (f - (res[i] + samples[i].second)) / h;
            }
        }

        std::vector<double> jtj(kNumParams * kNumParams, 0.0);
        std::vector<double> jtr(kNumParams, 0.0);
        for (int i = 0; i < m; ++i) {
            const double* row = &jac[static_cast<std::size_t>(i) * kNumParams];
            for (int a = 0; a < kNumParams; ++a) {
                jtr[a] += row[a] * res[i];
                for (int b2 = a; b2 < kNumParams; ++b2)
                    jtj[a * kNumParams + b2] += row[a] * row[b2];
            }
        }
        for (int a = 0; a < kNumParams; ++a)
            for (int b2 = 0; b2 < a; ++b2)
                jtj[a * kNumParams + b2] = jtj[b2 * kNumParams + a];

        double grad_inf = 0.0;
        for (double g : jtr) grad_inf = std::max(grad_inf, std::abs(g));
        if (grad_inf <= 1e-10 * std::max(1.0, cost)) {
            converged = true;
            break;
        }
        for (double& g : jtr) g = -g;

        bool improved = false;
        for (int attempt = 0; attempt < 16 && !improved; ++attempt) {
            std::vector<double> delta;
            if (solve_damped(jtj, jtr, lambda, kNumParams, delta)) {
                double trial[kNumParams];
                for (int j = 0; j < kNumParams; ++j) trial[j] = theta[j] + delta[j];
                // keep widths usable
                trial[7] = std::max(std::abs(trial[7]), 1e-6);
                trial[8] = std::max(std::abs(trial[8]), 1e-6);
                double trial_cost = residual_norm2(samples, unpack(trial));
                if (trial_cost < cost) {
                    std::copy(trial, trial + kNumParams, theta);
                    double rel_drop = (cost - trial_cost) / std::max(cost, 1e-300);
                    cost = trial_cost;
                    lambda = std::max(lambda * 0.3, 1e-12);
                    improved = true;
                    // converged only when a well-conditioned step stops paying
                    if (rel_drop < 1e-13 && lambda < 1e-2) converged = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!improved) break;  // stationary at every damping level
        if (converged) break;
    }

    FitResult out;
    out.params = unpack(theta);
    // contract: never worse than the caller's init
    if (residual_norm2(samples, init) < cost) {
        out.params = init;
        cost = residual_norm2(samples, init);
    }
    out.converged = converged;
    out.iterations = iter;
    out.residual_norm = std::sqrt(cost);
    return out;
}

// ---------------------------------------------------------------------------
// serialization

namespace {
const char* kFieldNames[kNumParams] = {"p1", "p2", "p3", "d_neg", "d_pos", "V_neg",
                                       "V_pos", "w_neg", "w_pos", "a1", "a2", "a3"};
}

void save_spectrum(std::ostream& out, const SpectrumParams& params) {
    double v[kNumParams];
    pack(params, v);
    out.precision(17);
    for (int i = 0; i < kNumParams; ++i)
        out << kFieldNames[i] << " = " << v[i] << "\n";
}

void save_spectrum_file(const std::string& path, const SpectrumParams& params) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    save_spectrum(f, params);
}

SpectrumParams load_spectrum(std::istream& in) {
    std::map<std::string, double> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        kv[key] = std::stod(val);
    }
    double v[kNumParams];
    SpectrumParams defaults;
    pack(defaults, v);
    for (int i = 0; i < kNumParams; ++i) {
        auto it = kv.find(kFieldNames[i]);
        if (it != kv.end()) v[i] = it->second;
    }
    return unpack(v);
}

SpectrumParams load_spectrum_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return load_spectrum(f);
}

} // namespace sqdm
