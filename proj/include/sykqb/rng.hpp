#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace sykqb {

// SplitMix64 step (Steele, Lea & Flood). Used both as a seed-mixing hash and
// to expand a 64-bit seed into generator state.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Per-realization seed derived from (base_seed, N, realization index) via a
// SplitMix64 chain. Identical on every platform and independent of thread
// scheduling, so disorder streams never overlap between realizations.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t n, std::uint64_t r) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64_next(s);
    s = h ^ (0x9E3779B97F4A7C15ULL * (n + 1));
    h = splitmix64_next(s);
    s = h ^ (0xBF58476D1CE4E5B9ULL * (r + 1));
    return splitmix64_next(s);
}

// xoshiro256** 1.0 (Blackman & Vigna), seeded by SplitMix64 expansion as the
// authors recommend. Chosen over std::mt19937_64 because the stream, and the
// normal deviates below, do not depend on the standard library in use.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) {
        for (auto& word : state_) word = splitmix64_next(seed);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal deviate, Marsaglia polar method (second value cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sykqb
