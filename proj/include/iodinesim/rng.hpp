#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iodinesim {

// Deterministic random source. mt19937_64 is fully specified by the standard;
// uniforms and gaussians are built by hand because the std distributions are
// implementation-defined and would break byte-identical reruns across stdlibs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; pairs are cached.
    double gaussian();

    // Stable sub-stream seed: splitmix64 over the master seed and a stream tag.
    static std::uint64_t derive(std::uint64_t master, std::string_view stream);

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace iodinesim
