#include "sqdm/samplegen.hpp"

#include <cmath>
#include <stdexcept>

#include "sqdm/rng.hpp"

namespace sqdm {

void SampleSpec::validate() const {
    if (grid_width <= 0 || grid_height <= 0)
        throw std::invalid_argument("SampleSpec: grid must be non-empty");
    if (!(extent_x > 0.0) || !(extent_y > 0.0))
        throw std::invalid_argument("SampleSpec: extents must be positive");
    if (!(delta_v0 > 0.0))
        throw std::invalid_argument("SampleSpec: delta_v0 must be > 0");
    if (total_variation_mv < 0.0)
        throw std::invalid_argument("SampleSpec: total variation must be >= 0");
    if (split_fraction < 0.0 || split_fraction > 1.0)
        throw std::invalid_argument("SampleSpec: split_fraction must be in [0,1]");
    if (random_blobs < 0)
        throw std::invalid_argument("SampleSpec: random_blobs must be >= 0");
    for (const auto& b : blobs)
        if (!(b.sigma_x > 0.0) || !(b.sigma_y > 0.0))
            throw std::invalid_argument("SampleSpec: blob widths must be positive");
}

Grid gen_potential(const SampleSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<GaussianBlob> blobs = spec.blobs;

    SplitMix64 rng(seed);
    for (int i = 0; i < spec.random_blobs; ++i) {
        GaussianBlob b;
        b.cx = (0.1 + 0.8 * rng.next_unit()) * spec.extent_x;
        b.cy = (0.1 + 0.8 * rng.next_unit()) * spec.extent_y;
        b.sigma_x = (0.06 + 0.10 * rng.next_unit()) * spec.extent_x;
        b.sigma_y = (0.06 + 0.10 * rng.next_unit()) * spec.extent_y;
        b.amp_mv = (rng.next_unit() * 2.0 - 1.0) * 60.0;
        blobs.push_back(b);
    }

    bool has_feature = !blobs.empty() || spec.ramp_x_mv_per_ang != 0.0 ||
                       spec.ramp_y_mv_per_ang != 0.0;
    if (!has_feature)
        throw std::invalid_argument("gen_potential: spec has no features");

    Grid phi(spec.grid_width, spec.grid_height);
    double dx = spec.extent_x / spec.grid_width;
    double dy = spec.extent_y / spec.grid_height;
    for (int iy = 0; iy < spec.grid_height; ++iy) {
        double y = (iy + 0.5) * dy;
        for (int ix = 0; ix < spec.grid_width; ++ix) {
            double x = (ix + 0.5) * dx;
            double v_mv = spec.ramp_x_mv_per_ang * x + spec.ramp_y_mv_per_ang * y;
            for (const auto& b : blobs) {
                double ux = (x - b.cx) / b.sigma_x;
                double uy = (y - b.cy) / b.sigma_y;
                v_mv += b.amp_mv * std::exp(-(ux * ux + uy * uy));
            }
            phi.at(ix, iy) = v_mv * 1e-3;
        }
    }

    if (spec.total_variation_mv > 0.0) {
        double span = phi.span();
        if (span <= 0.0)
            throw std::invalid_argument("gen_potential: flat potential cannot be rescaled");
        double scale = spec.total_variation_mv * 1e-3 / span;
        for (double& v : phi.data) v *= scale;
    }
    // potential zero sits at the scan origin, where the reference points for
    // the reconstruction are taken
    double origin = phi.at(0, 0);
    for (double& v : phi.data) v -= origin;
    return phi;
}

DipMaps potential_to_dipmaps(const Grid& phi, const SampleSpec& spec) {
    spec.validate();
    DipMaps maps;
    maps.v_neg = Grid(phi.width, phi.height);
    maps.v_pos = Grid(phi.width, phi.height);
    maps.extent_x = spec.extent_x;
    maps.extent_y = spec.extent_y;

    double beta = spec.mode == DipMapMode::Split ? spec.split_fraction : 0.0;
    for (std::size_t i = 0; i < phi.data.size(); ++i) {
        double p = phi.data[i];
        // v_neg carries (1-beta) of the potential; the separation the rest:
        // phi = v_neg0 * dv/dv0 - v_neg holds exactly in both modes.
        double v_neg = spec.v_neg0 - (1.0 - beta) * p;
        double dv = spec.delta_v0 * (1.0 + beta * p / spec.v_neg0);
        maps.v_neg.data[i] = v_neg;
        maps.v_pos.data[i] = v_neg + dv;
    }
    maps.validate();
    return maps;
}

} // namespace sqdm
