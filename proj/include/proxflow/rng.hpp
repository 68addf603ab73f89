#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace proxflow {

// Single per-run random stream. The draw order is part of the
// reproducibility contract:
//   1. cloud initialization, one sample per particle (particle-major,
//      dimension-minor),
//   2. per step k: Euler-Maruyama increments (particle-major,
//      dimension-minor; only the momentum block for underdamped systems),
//   3. per step k: the N uniform entries of the proximal solver's z0.
// Every value is a pure function of the seed and the number of draws so
// far; gaussian() uses the cosine Box-Muller branch with no cached spare.
class RunRng {
public:
    explicit RunRng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on the open interval (0,1).
    double uniform01() {
        const std::uint64_t bits = gen_() >> 11;  // top 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    }

    // Standard normal deviate. Consumes exactly two uniforms.
    double gaussian() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    static constexpr double kTwoPi = 6.283185307179586476925286766559;
    std::mt19937_64 gen_;
};

}  // namespace proxflow
