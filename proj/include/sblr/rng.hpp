#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sblr {

/* Seed wrapper so call sites are explicit about what is being seeded. */
struct RngSpec
{
    std::uint64_t seed = 0;
};

/**
 * Deterministic normal-variate source used by every data generator.
 *
 * Uniforms come from std::mt19937_64 (bit-exact per the standard) mapped
 * to [0,1) via (x >> 11) * 2^-53. Normals use the Box-Muller transform:
 *   u1 = 1 - uniform()  in (0,1],  u2 = uniform()
 *   z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
 * with z1 cached for the next call. Fixing the method (instead of the
 * implementation-defined std::normal_distribution) keeps streams
 * reproducible for a given seed.
 */
class NormalGenerator
{
public:
    explicit NormalGenerator(std::uint64_t seed) : gen_(seed) {}
    explicit NormalGenerator(const RngSpec& spec) : gen_(spec.seed) {}

    double uniform()
    {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double normal()
    {
        if (hasCached_) {
            hasCached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cached_ = radius * std::sin(angle);
        hasCached_ = true;
        return radius * std::cos(angle);
    }

    /* Uniform integer in [0, bound) by modulo; bound must be positive. */
    std::uint64_t below(std::uint64_t bound)
    {
        return gen_() % bound;
    }

private:
    std::mt19937_64 gen_;
    bool hasCached_ = false;
    double cached_ = 0.0;
};

}  // namespace sblr
