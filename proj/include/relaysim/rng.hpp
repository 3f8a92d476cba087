#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace relaysim {

// SplitMix64 mixer, used to derive per-stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Seed-splitting rule for parallel streams: stream k of master seed s is
// seeded with splitmix64(s ^ splitmix64(k)). Streams with distinct indices
// are decorrelated and the mapping is stable across platforms.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream));
}

// Random source built on std::mt19937_64. The engine's raw output sequence
// is pinned by the standard; the transforms below avoid std::*_distribution
// (whose sequences are implementation-defined), so draws are identical
// across standard libraries for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform on {0, ..., n-1}.
    int uniform_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(gen_()) *
                                 static_cast<unsigned __int128>(n)) >> 64);
    }

    // Exponential with the given mean, by inverse CDF.
    double exponential(double mean) {
        return -mean * std::log1p(-uniform());
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
};

} // namespace relaysim
