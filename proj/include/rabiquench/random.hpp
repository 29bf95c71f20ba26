#pragma once

#include <cstdint>
#include <random>

namespace rabiquench {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of sub-stream `stream` under `master`. Distinct (master, stream)
/// pairs map to decorrelated engine seeds, so trajectory i of an ensemble
/// draws the same numbers whatever thread runs it.
constexpr std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(~stream));
}

class StreamRng {
public:
    StreamRng(std::uint64_t master, std::uint64_t stream)
        : engine_(derive_stream_seed(master, stream)) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool coin() { return (engine_() >> 63) != 0; }

private:
    std::mt19937_64 engine_;
};

}  // namespace rabiquench
