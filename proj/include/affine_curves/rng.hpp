#pragma once

// Per-stream random numbers. Each (seed, path, branch) triple maps to an
// independently seeded Mersenne Twister, so results do not depend on the order
// or thread in which paths are generated.

#include <cstdint>
#include <random>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace affine_curves {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t path, std::uint64_t branch = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ path) ^ branch);
}

class Rng {
public:
    explicit Rng(std::uint64_t key) : engine_(key) {}
    Rng(std::uint64_t seed, std::uint64_t path, std::uint64_t branch = 0) : engine_(stream_key(seed, path, branch)) {}

    double normal() { return normal_(engine_); }
    double exp1() { return exp_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

private:
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::exponential_distribution<double> exp_;
};

}  // namespace affine_curves
