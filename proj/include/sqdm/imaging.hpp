#ifndef SQDM_IMAGING_HPP
#define SQDM_IMAGING_HPP

#include <string>
#include <vector>

#include "sqdm/grid.hpp"
#include "sqdm/plant.hpp"

namespace sqdm {

/// One closed-loop sample of a scan. `v_b` is the dither-free bias used for
/// imaging and equals v_b_c + v_b_ff exactly.
struct ScanSample {
    double t = 0.0;   // s
    double x = 0.0;   // Angstrom
    double y = 0.0;
    int line = 0;
    int pixel_x = 0;
    int direction = 0;  // 0 forward, 1 backward
    double v_b = 0.0;    // V
    double v_b_c = 0.0;  // V
    double v_b_ff = 0.0; // V
    double df_meas = 0.0;  // Hz
    int fault = 0;  // bit 0: outside the dip window, bit 1: controller freeze
};

using ScanRecord = std::vector<ScanSample>;

struct AssembledMap {
    Grid values;  // per-pixel mean of v_b over all dwell samples
    Grid counts;  // samples per pixel
    std::vector<std::pair<int, int>> missing;  // (ix, iy) never visited
};

/// Pool every sample of the record into its pixel (both scan directions)
/// and average. Pixels without samples are flagged, their value is 0.
AssembledMap assemble_map(const ScanRecord& record, const ScanConfig& cfg);

/// Reconstructed effective-potential image plus the reference points and
/// provenance it was computed with.
struct PotentialImage {
    Grid phi;  // V
    double v_neg0 = 0.0;
    double delta_v0 = 0.0;
    double extent_x = 0.0;
    double extent_y = 0.0;
    std::string provenance_neg;
    std::string provenance_pos;
};

/// Per-pixel surface potential from the two tracked dip maps:
///   phi = v_neg0 * (v_pos - v_neg) / delta_v0 - v_neg.
/// Throws std::invalid_argument on shape mismatch or delta_v0 == 0.
PotentialImage compute_phi_star(const Grid& v_neg_map, const Grid& v_pos_map,
                                double v_neg0, double delta_v0);

struct ScoreResult {
    double mse = 0.0;      // V^2
    double rmse_mv = 0.0;  // mV
    double psnr_db = 0.0;  // +inf for identical images
    Grid error_map;        // image - reference, V
};

/// MSE/RMSE/PSNR against a reference image. PSNR is normalized by the
/// reference peak-to-peak range R: 10*log10(R^2 / MSE).
ScoreResult score(const Grid& image, const Grid& reference);

} // namespace sqdm

#endif
