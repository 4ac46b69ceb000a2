#include "iodinesim/rng.hpp"

#include <cmath>

namespace iodinesim {

double Rng::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // u1 in (0,1] so the log is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

std::uint64_t Rng::derive(std::uint64_t master, std::string_view stream) {
    // FNV-1a over the tag, then a couple of splitmix64 rounds mixed with the
    // master seed. Cheap, stable, and well spread.
    std::uint64_t h = 14695981039346656037ull;
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t x = master + 0x9e3779b97f4a7c15ull + h;
    for (int i = 0; i < 2; ++i) {
        x += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        x = z ^ (z >> 31);
    }
    return x;
}

}  // namespace iodinesim
