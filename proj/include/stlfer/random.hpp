#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace stlfer {

/// Deterministic seedable random stream (splitmix64 core). The sequence
/// depends only on the seed, never on platform word order or scheduling.
/// Single-owner by contract: never share one stream across threads; derive
/// child streams instead.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    /// Uniform integer in [lo, hi], both bounds inclusive. Unbiased.
    int uniform_int(int lo, int hi);

    /// Uniform double in [0, 1).
    double uniform_real();

    /// Uniform double in [lo, hi).
    double uniform_real(double lo, double hi);

    /// Box-Muller normal deviate.
    double gaussian(double mean, double stddev);

    /// Fisher-Yates shuffle, in place.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
            int j = uniform_int(0, i);
            std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(j)]);
        }
    }

    /// Child stream keyed by a purpose string and index. Derivation uses the
    /// parent's original seed, not its consumption state, so the set of
    /// children is stable no matter how much of the parent was consumed.
    RandomStream child(std::string_view purpose, std::uint64_t index = 0) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t state_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a 64-bit string hash, used for stream derivation purposes.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace stlfer
