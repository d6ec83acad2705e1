#pragma once

// Substream seeding. Every consumer that wants reproducibility independent
// of evaluation order derives one substream per logical unit of work (sample
// index, epoch number) instead of sharing a sequential generator. The
// derivation mixes (seed, stream) through SplitMix64 so neighboring stream
// ids land far apart in state space.

#include <cstdint>
#include <random>

namespace qlbm::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(~stream));
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(derive_seed(seed, stream));
}

// Fisher-Yates with an explicit bounded-draw loop so shuffles do not depend
// on the standard library's unspecified std::shuffle algorithm.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        // rejection sampling keeps the draw unbiased for any bound
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
        std::uint64_t r;
        do {
            r = g();
        } while (r >= limit);
        std::swap(v[i - 1], v[r % bound]);
    }
}

}  // namespace qlbm::rng
