#ifndef SQDM_GRID_HPP
#define SQDM_GRID_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sqdm {

/// Dense row-major 2-D grid of doubles. Row index iy runs along the slow
/// scan direction (y), column index ix along the fast direction (x).
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("Grid: dimensions must be positive");
    }

    double& at(int ix, int iy) { return data[index(ix, iy)]; }
    double at(int ix, int iy) const { return data[index(ix, iy)]; }

    std::size_t index(int ix, int iy) const {
        if (ix < 0 || ix >= width || iy < 0 || iy >= height)
            throw std::out_of_range("Grid: index out of range");
        return static_cast<std::size_t>(iy) * width + ix;
    }

    bool same_shape(const Grid& other) const {
        return width == other.width && height == other.height;
    }

    double min_value() const {
        double m = data.empty() ? 0.0 : data[0];
        for (double v : data) m = v < m ? v : m;
        return m;
    }
    double max_value() const {
        double m = data.empty() ? 0.0 : data[0];
        for (double v : data) m = v > m ? v : m;
        return m;
    }
    /// Peak-to-peak span (max - min).
    double span() const { return max_value() - min_value(); }
};

} // namespace sqdm

#endif
