#include "synergy/rng.hpp"

#include "synergy/stats.hpp"

namespace synergy {

double SplitMix64::normal() {
    return stats::normal_quantile(uniform01());
}

namespace {

// One SplitMix64 scramble round, used as the mixing function.
std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix(mix(base + 0x9E3779B97F4A7C15ULL) ^ (stream + 0xD1B54A32D192ED03ULL));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t substream) {
    return derive_seed(derive_seed(base, stream), substream);
}

}  // namespace synergy
