#include "sqdm/imaging.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sqdm {

AssembledMap assemble_map(const ScanRecord& record, const ScanConfig& cfg) {
    AssembledMap out;
    out.values = Grid(cfg.pixels_per_line, cfg.lines);
    out.counts = Grid(cfg.pixels_per_line, cfg.lines);
    for (const auto& s : record) {
        if (s.line < 0 || s.line >= cfg.lines || s.pixel_x < 0 ||
            s.pixel_x >= cfg.pixels_per_line)
            throw std::out_of_range("assemble_map: sample outside the configured grid");
        out.values.at(s.pixel_x, s.line) += s.v_b;
        out.counts.at(s.pixel_x, s.line) += 1.0;
    }
    for (int iy = 0; iy < cfg.lines; ++iy) {
        for (int ix = 0; ix < cfg.pixels_per_line; ++ix) {
            double c = out.counts.at(ix, iy);
            if (c > 0.0)
                out.values.at(ix, iy) /= c;
            else
                out.missing.emplace_back(ix, iy);
        }
    }
    return out;
}

PotentialImage compute_phi_star(const Grid& v_neg_map, const Grid& v_pos_map,
                                double v_neg0, double delta_v0) {
    if (!v_neg_map.same_shape(v_pos_map))
        throw std::invalid_argument("compute_phi_star: map shapes differ");
    if (delta_v0 == 0.0)
        throw std::invalid_argument("compute_phi_star: delta_v0 must be nonzero");
    PotentialImage img;
    img.phi = Grid(v_neg_map.width, v_neg_map.height);
    img.v_neg0 = v_neg0;
    img.delta_v0 = delta_v0;
    for (std::size_t i = 0; i < img.phi.data.size(); ++i) {
        double vn = v_neg_map.data[i];
        double vp = v_pos_map.data[i];
        img.phi.data[i] = v_neg0 * (vp - vn) / delta_v0 - vn;
    }
    return img;
}

ScoreResult score(const Grid& image, const Grid& reference) {
    if (!image.same_shape(reference))
        throw std::invalid_argument("score: image shapes differ");
    ScoreResult res;
    res.error_map = Grid(image.width, image.height);
    double sum2 = 0.0;
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        double e = image.data[i] - reference.data[i];
        res.error_map.data[i] = e;
        sum2 += e * e;
    }
    res.mse = sum2 / static_cast<double>(image.data.size());
    res.rmse_mv = std::sqrt(res.mse) * 1e3;
    double range = reference.span();
    res.psnr_db = res.mse > 0.0
                      ? 10.0 * std::log10(range * range / res.mse)
                      : std::numeric_limits<double>::infinity();
    return res;
}

} // namespace sqdm
