#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "vsum/real.hpp"

VSUM_NS_BEGIN

// Deterministic random source. All draws go through explicit arithmetic on
// the raw mt19937_64 stream instead of std distributions, whose output is
// implementation-defined; the same seed gives the same sequence everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform_double() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    Real uniform() { return static_cast<Real>(uniform_double()); }

    Real uniform(Real lo, Real hi) {
        return lo + (hi - lo) * static_cast<Real>(uniform_double());
    }

    // Standard normal via Box-Muller, one spare cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_double();
        while (u1 <= 0.0) u1 = uniform_double();
        const double u2 = uniform_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Unbiased index in [0, n).
    std::size_t index(std::size_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r = gen_();
        while (r >= limit) r = gen_();
        return static_cast<std::size_t>(r % n);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

VSUM_NS_END
