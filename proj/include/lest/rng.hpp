#pragma once

#include <cstdint>
#include <string_view>

namespace lest {

// All randomness in the library flows through this generator. It is a plain
// splitmix64 counter stream, so the n-th draw is a pure function of (seed, n)
// and identical on every platform. std::mt19937 and the std distributions are
// deliberately not used anywhere: their output is not pinned across standard
// library implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Lemire multiply-shift; slightly biased for
    /// astronomically large n, fully deterministic, which is what matters here.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

/// 64-bit FNV-1a. Used to fan a single top-level seed out into named
/// per-component sub-seeds.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Sub-seed for a named component: mix(root ^ fnv1a(name)). Distinct names
/// give statistically independent streams from one root seed.
inline std::uint64_t named_seed(std::uint64_t root, std::string_view name) {
    std::uint64_t z = root ^ fnv1a64(name);
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

} // namespace lest
