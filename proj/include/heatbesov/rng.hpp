#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace heatbesov {

/// mt19937_64 with distribution code written out here, because the standard
/// distributions are implementation-defined and would break cross-platform
/// reproducibility of seeded experiments.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1).
    double uniform() {
        for (;;) {
            const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t index(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

    /// Box-Muller, one value per call.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace heatbesov
