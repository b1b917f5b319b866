#ifndef SQDM_SAMPLEGEN_HPP
#define SQDM_SAMPLEGEN_HPP

#include <cstdint>
#include <vector>

#include "sqdm/grid.hpp"
#include "sqdm/plant.hpp"

namespace sqdm {

/// How a synthetic potential is realized as dip maps.
///  - ShiftNegOnly: the whole potential moves V_neg; V_pos - V_neg stays
///    constant across the grid.
///  - Split: a fraction of the potential is realized through a varying dip
///    separation instead.
enum class DipMapMode { ShiftNegOnly, Split };

struct GaussianBlob {
    double cx = 0.0;      // Angstrom
    double cy = 0.0;      // Angstrom
    double sigma_x = 1.0; // Angstrom
    double sigma_y = 1.0; // Angstrom
    double amp_mv = 0.0;  // mV
};

/// Synthetic ground-truth surface description: Gaussian features over a flat
/// background plus an optional linear ramp, rescaled to a target
/// peak-to-peak variation.
struct SampleSpec {
    int grid_width = 64;
    int grid_height = 64;
    double extent_x = 600.0;  // Angstrom
    double extent_y = 600.0;
    std::vector<GaussianBlob> blobs;
    int random_blobs = 0;       // extra seeded blobs
    double ramp_x_mv_per_ang = 0.0;
    double ramp_y_mv_per_ang = 0.0;
    double total_variation_mv = 190.5;  // 0 disables rescaling
    double v_neg0 = -1.3;  // V, reference dip position at zero potential
    double delta_v0 = 5.6; // V, reference dip separation; must be > 0
    DipMapMode mode = DipMapMode::ShiftNegOnly;
    double split_fraction = 0.3;  // share realized through delta-V in Split mode

    void validate() const;
};

/// Evaluate the blob/ramp potential and rescale its peak-to-peak span to the
/// total-variation target. Deterministic per seed (the seed only feeds the
/// optional random blobs). Returns volts. Throws std::invalid_argument for a
/// featureless spec that cannot be rescaled.
Grid gen_potential(const SampleSpec& spec, std::uint64_t seed);

/// Invert the imaging equation: build the dip maps whose reconstruction
/// reproduces `phi` exactly (to rounding) under the spec's reference points.
DipMaps potential_to_dipmaps(const Grid& phi, const SampleSpec& spec);

} // namespace sqdm

#endif
