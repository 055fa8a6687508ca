#pragma once

#include <cstdint>
#include <random>

namespace advfl {

using Rng = std::mt19937_64;

/// Named independent streams derived from one master seed.
enum class Stream : std::uint64_t {
    Sampling = 0x53414d50ULL,   // client sampling, bucketing permutations
    DataNoise = 0x44415441ULL,  // per (client, round) data draws
    Adversary = 0x41445653ULL,  // adversary's private randomness
    Stopping = 0x53544f50ULL,   // random stopping time R
    Instance = 0x494e5354ULL,   // instance construction and evaluation batches
};

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the stream `s` at coordinates (a, b), e.g. (round, client).
/// Every (master, stream, a, b) tuple yields an independent generator, so
/// consuming one stream never shifts the draws of another.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(master ^ static_cast<std::uint64_t>(s));
    h = splitmix64(h ^ (a * 0xd1b54a32d192ed03ULL));
    h = splitmix64(h ^ (b * 0x8cb92ba72f3d8dd7ULL + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t master, Stream s, std::uint64_t a = 0, std::uint64_t b = 0) {
    return Rng(derive_seed(master, s, a, b));
}

inline double std_normal(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

inline double uniform01(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng);
}

}  // namespace advfl
