#pragma once

#include <cstdint>

namespace synergy {

// SplitMix64: tiny, fast, full-period 64-bit generator. Chosen over the
// standard-library engines because its output is pinned by this header alone,
// which keeps simulation output byte-identical across toolchains.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform draw strictly inside (0, 1): 53 random bits centered on the
    // grid k + 1/2 so neither endpoint is reachable.
    double uniform01() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal draw via the inverse CDF. One uniform per deviate, so
    // the stream position is independent of rejection behavior.
    double normal();

private:
    std::uint64_t state_;
};

// Derives an independent stream seed from a base seed and stream indices.
// Used to give every subject / replicate its own generator so that results
// do not depend on evaluation order or thread scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t substream);

}  // namespace synergy
