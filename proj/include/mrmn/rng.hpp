#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mrmn {

// splitmix64 finalizer; used for seed derivation and stateless hashing.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a stream id.
// Per-user candidate streams use the user index here, so adding users never
// reshuffles the candidates of existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ splitmix64(stream));
}

// Named stream salts so the independent consumers of one run seed never share
// a raw stream id.
namespace seed_stream {
inline constexpr std::uint64_t init = 0x696E6974ULL;        // parameter init
inline constexpr std::uint64_t train = 0x747261696EULL;     // shuffle + negatives
inline constexpr std::uint64_t eval = 0x6576616CULL;        // candidate sampling
inline constexpr std::uint64_t attention = 0x617474ULL;     // attention export
}  // namespace seed_stream

// Deterministic RNG: mt19937_64 engine with fixed arithmetic on top, so draws
// are identical across standard libraries (std distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 bits of mantissa.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform on [0, n). Modulo bias is ~n/2^64, irrelevant at catalog sizes.
    std::size_t next_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    // Fisher-Yates with this engine; std::shuffle is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t k = v.size(); k > 1; --k) {
            std::size_t j = next_index(k);
            std::swap(v[k - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mrmn
