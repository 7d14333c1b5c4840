#pragma once

#include <cmath>
#include <cstdint>

namespace explq {

/// 64-bit mixing constant (golden-ratio increment) used both inside the
/// generator and to derive per-episode seeds. Fixed so that streams are
/// reproducible independent of worker count and scheduling.
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += kGoldenGamma;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed for episode i: seed_base advanced by (i+1) golden-gamma steps and
/// mixed. Episodes can then run in any order or in parallel.
inline std::uint64_t episode_seed(std::uint64_t seed_base, std::uint64_t episode) {
    std::uint64_t s = seed_base + (episode + 1) * kGoldenGamma;
    return splitmix64(s);
}

/// xoshiro256++ seeded via splitmix64. Self-contained so that streams are
/// bit-identical across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        have_spare_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on (0,1): 53-bit mantissa, nudged away from zero.
    double next_uniform() {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (second value cached).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace explq
