#pragma once

// Deterministic random streams. mt19937_64 output is pinned bit-for-bit by the
// C++ standard, but the <random> distributions are not; every transform used
// by the toolkit is therefore spelled out here, so a given seed produces the
// same sample stream on any conforming platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace homsim::rng {

// splitmix64 step; derives statistically independent sub-seeds from a master
// seed, e.g. one per Monte-Carlo shard.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Stream {
public:
    explicit Stream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as a log argument.
    double uniform_pos() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the second deviate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    // Poisson by counting unit-exponential arrivals within [0, mean]; exact for
    // any mean and free of the e^-mean underflow of the product method. O(mean).
    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        std::uint64_t k = 0;
        double acc = -std::log(uniform_pos());
        while (acc <= mean) {
            ++k;
            acc += -std::log(uniform_pos());
        }
        return k;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace homsim::rng
