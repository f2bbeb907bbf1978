#pragma once

#include <cstdint>

namespace tailcausal {

// Counter-based pseudo-random numbers built on the SplitMix64 mixer.  The
// k-th output of a stream with key s is mix(s + (k+1)*gamma), so any draw is
// addressable directly and streams can be split without shared state.

namespace rng_detail {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kStreamMult = 0xD1342543DE82EF95ULL;
inline constexpr std::uint64_t kSeedTweak = 0x8E2FAC5D1B537E91ULL;

inline std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace rng_detail

/// Output `counter` of the stream with the given key.
inline std::uint64_t splitmix_at(std::uint64_t key, std::uint64_t counter) {
    return rng_detail::mix(key + (counter + 1) * rng_detail::kGamma);
}

/// Independent stream key for (seed, stream_index).
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return rng_detail::mix(rng_detail::mix(seed ^ rng_detail::kSeedTweak) + (stream + 1) * rng_detail::kStreamMult);
}

/// Maps 64 random bits to the open interval (0,1). Endpoints are excluded so
/// inverse-survival transforms stay finite; with 52 payload bits both
/// extremes (2^-53 and 1 - 2^-53) are exactly representable.
inline double to_unit_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * (1.0 / 4503599627370496.0); // 2^-52
}

/// Sequential generator over a single stream; used for utility randomness
/// (graph/coefficient draws, axiom-check inputs).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(stream_key(seed, stream)) {}

    std::uint64_t next_u64() { return splitmix_at(key_, counter_++); }

    double next_unit() { return to_unit_open(next_u64()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Unbiased integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % bound;
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Replication-blocked uniforms for simulation: replications (rows) are
/// grouped into fixed blocks of 4096 and each block owns an independent
/// stream keyed by (seed, block). Results are therefore identical no matter
/// how replications are partitioned across workers.
class BlockRng {
public:
    static constexpr std::uint64_t kBlockSize = 4096;

    BlockRng(std::uint64_t seed, std::uint64_t draws_per_replication)
        : seed_(seed), per_replication_(draws_per_replication) {}

    double unit(std::uint64_t replication, std::uint64_t draw) const {
        const std::uint64_t block = replication / kBlockSize;
        const std::uint64_t key = stream_key(seed_, block);
        const std::uint64_t counter = (replication % kBlockSize) * per_replication_ + draw;
        return to_unit_open(splitmix_at(key, counter));
    }

private:
    std::uint64_t seed_;
    std::uint64_t per_replication_;
};

} // namespace tailcausal
