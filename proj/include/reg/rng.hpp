#ifndef REG_RNG_HPP
#define REG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace reg {

// Seeded pseudo-random source used everywhere randomness is needed.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// C++ standard, and the uniform/normal variates are derived from that
// sequence by fixed arithmetic (53-bit mantissa scaling, Box-Muller)
// rather than the standard-library distributions, whose algorithms are
// implementation-defined. Identical seeds therefore reproduce bitwise
// identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Box-Muller; the second variate of each pair is cached.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(two_pi * u2);
        have_spare_ = true;
        return mean + stddev * r * std::cos(two_pi * u2);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace reg

#endif  // REG_RNG_HPP
