#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace safdr {

// splitmix64 finaliser; bit-stable everywhere, used for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

template <typename... Rest>
std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b, Rest... rest) {
    return seed_combine(seed_combine(a, b), static_cast<std::uint64_t>(rest)...);
}

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is pinned by the
/// standard. The distributions are implemented here because the standard
/// library's are implementation-defined; results must be identical across
/// platforms and compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound); bound must be positive. Unbiased
    /// (masked rejection sampling).
    int uniform_int(int bound) {
        const auto b = static_cast<std::uint64_t>(bound);
        std::uint64_t mask = b - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        std::uint64_t v;
        do {
            v = next_u64() & mask;
        } while (v >= b);
        return static_cast<int>(v);
    }

    /// Fisher-Yates shuffle using this stream.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (int i = static_cast<int>(values.size()) - 1; i > 0; --i) {
            const int j = uniform_int(i + 1);
            std::swap(values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace safdr
