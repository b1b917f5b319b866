#ifndef SQDM_RNG_HPP
#define SQDM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace sqdm {

/// splitmix64 — tiny counter-based PRNG. Used directly for uniforms and as
/// the seed-derivation hash for sweep variants, so independent runs get
/// decorrelated streams from one master seed.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

/// Derive the seed for variant `index` of a sweep from the master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 s(master + (index + 1) * 0x9E3779B97F4A7C15ull);
    return s.next_u64();
}

/// Seeded Gaussian generator (Box-Muller over splitmix64). Hand-rolled so the
/// stream is bit-stable across standard libraries and platforms.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : uni_(seed) {}

    double next(double mean = 0.0, double stddev = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        // u1 in (0,1] so the log is finite
        double u1 = 1.0 - uni_.next_unit();
        double u2 = uni_.next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + stddev * r * std::cos(a);
    }

  private:
    SplitMix64 uni_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace sqdm

#endif
