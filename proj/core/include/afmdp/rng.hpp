#pragma once

#include <cstdint>
#include <initializer_list>

namespace afmdp {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a parent seed and a tuple of
/// counters. Equal inputs give equal outputs on every platform, which is the
/// only property the sampling code relies on for reproducibility.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept;

/// Counter-based SplitMix64 stream with a portable uniform conversion.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Exp(1) variate via inversion.
    double exponential() noexcept;

    /// Standard normal variate (Box-Muller, one value per call).
    double normal() noexcept;

private:
    std::uint64_t state_;
};

}  // namespace afmdp
