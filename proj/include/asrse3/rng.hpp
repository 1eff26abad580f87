#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace asrse3 {

/// Seeded random source. A thin wrapper over std::mt19937_64 with
/// hand-pinned integer/real draws so sampled sequences depend only on
/// this header, never on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform integer in [0, n). Rejection-sampled, no modulo bias.
    int below(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t v;
        do { v = gen_(); } while (v >= limit);
        return static_cast<int>(v % un);
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double real() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double range(double lo, double hi) { return lo + (hi - lo) * real(); }

    bool chance(double p) { return real() < p; }

    /// Derives an independent seed for a sub-stream (episode index,
    /// worker id, ...). Pure function of (seed, stream).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 over the combined key
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
};

/// FNV-1a over raw bytes; used for config hashes and observation keys.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace asrse3
