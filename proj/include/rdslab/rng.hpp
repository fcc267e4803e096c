#pragma once

#include <cstdint>

namespace rdslab {

/// Counter-based splittable generator. A (seed, stream) pair names an
/// independent sequence; the k-th output depends only on (seed, stream, k),
/// so results are reproducible bit-for-bit regardless of threading and
/// platform. The word function is the SplitMix64 finalizer applied to a
/// Weyl sequence keyed by (seed, stream).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(derive_key(seed, stream)), counter_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (counter_++) * 0x9E3779B97F4A7C15ull;
        return finalize(z);
    }

    /// Uniform double in [0,1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform double in [-amp, amp].
    double next_symmetric(double amp) {
        return amp * (2.0 * next_double() - 1.0);
    }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t a = finalize(seed + 0x9E3779B97F4A7C15ull);
        std::uint64_t b = finalize(stream + 0xD1B54A32D192ED03ull);
        return finalize(a ^ (b * 0xCA5A826395121157ull));
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace rdslab
