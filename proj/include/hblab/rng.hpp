#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <random>

namespace hblab {

// Deterministic random source. All distributions are derived from raw
// mt19937_64 output with fixed arithmetic, so streams are identical across
// platforms and standard-library implementations (std::normal_distribution
// is not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal via Box-Muller, cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    std::complex<double> in_box(double x_lo, double x_hi, double y_lo, double y_hi) {
        double x = uniform(x_lo, x_hi);
        double y = uniform(y_lo, y_hi);
        return {x, y};
    }

    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace hblab
