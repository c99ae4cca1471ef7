#pragma once
// Counter-based pseudo-random number generation with explicit substreams.
//
// Design goals:
//  * Full determinism from a 64-bit seed.
//  * Cheap random access to independent substreams so that work item i
//    (a Monte-Carlo trial, a disturbance sample) always consumes the same
//    random numbers regardless of how items are batched across threads.
//
// The generator applies the SplitMix64 avalanche function to a per-stream
// key advanced by a fixed odd increment; each substream is therefore an
// independently seeded SplitMix64 sequence. This is a statistical RNG for
// Monte-Carlo use, not a cryptographic one.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ccstat {

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer: high-quality 64-bit avalanche.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
} // namespace detail

// Derives a decorrelated 64-bit key from a base seed and a stream id; use it
// to split one user seed into independent families of substreams.
inline std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t stream) noexcept {
    return detail::mix64(detail::mix64(seed) ^ (stream * 0xD1342543DE82EF95ull + 1u));
}

// One independent random substream, identified by (seed, stream).
class Substream {
public:
    Substream(std::uint64_t seed, std::uint64_t stream) noexcept
        : state_(derive_stream_key(seed, stream)) {}

    std::uint64_t next_u64() noexcept {
        state_ += detail::kGolden;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform double strictly inside (0, 1): 53 random bits offset by half an ulp.
    double next_uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via the Box-Muller transform; the second value of each
    // pair is cached, so draws come in deterministic order within the stream.
    double next_normal() noexcept {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi_v<double> * u2;
        cached_ = r * std::sin(angle);
        has_cached_ = true;
        return r * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace ccstat
