#include "stlfer/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stlfer {

namespace {

std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

std::uint64_t RandomStream::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

int RandomStream::uniform_int(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
    std::uint64_t range = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
    // Rejection sampling keeps the draw unbiased for any range.
    std::uint64_t threshold = (0ULL - range) % range;
    for (;;) {
        std::uint64_t x = next_u64();
        if (x >= threshold) return lo + static_cast<int>(x % range);
    }
}

double RandomStream::uniform_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_real(double lo, double hi) {
    return lo + (hi - lo) * uniform_real();
}

double RandomStream::gaussian(double mean, double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    // Box-Muller; u1 is kept strictly positive so log() stays finite.
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform_real();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + stddev * r * std::cos(theta);
}

RandomStream RandomStream::child(std::string_view purpose, std::uint64_t index) const {
    std::uint64_t s = splitmix64_mix(seed_ ^ fnv1a64(purpose));
    s = splitmix64_mix(s + 0x9E3779B97F4A7C15ULL * (index + 1));
    return RandomStream(s);
}

}  // namespace stlfer
