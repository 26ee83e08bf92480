#pragma once

#include <cstdint>

namespace gesched {

// Counter-based stream RNG built on the SplitMix64 output function.
//
// Each stream is identified by (master_seed, rep_id, stream_id). The n-th
// output of a stream is mix64(key + n * GAMMA), so streams are stateless
// apart from a counter, trivially replayable, and cheap to fork: every
// simulated entity (channel, arrival process, policy randomization) owns
// its own stream and consumes it independently of what other entities do.
class StreamRng {
public:
    StreamRng() : key_(mix64(0xdeadbeef)), counter_(0) {}

    StreamRng(std::uint64_t master_seed, std::uint64_t rep_id, std::uint64_t stream_id)
        : key_(derive_key(master_seed, rep_id, stream_id)), counter_(0) {}

    /// Next raw 64-bit value.
    std::uint64_t next_u64() {
        counter_ += GAMMA;
        return mix64(key_ + counter_);
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// True with probability p.
    bool bernoulli(double p) { return next_double() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Modulo bias is negligible for n << 2^64.
        return next_u64() % n;
    }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + next_double() * (b - a); }

    std::uint64_t key() const { return key_; }

private:
    static constexpr std::uint64_t GAMMA = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive_key(std::uint64_t master, std::uint64_t rep, std::uint64_t stream) {
        std::uint64_t k = mix64(master ^ 0xA5A5A5A5A5A5A5A5ull);
        k = mix64(k + GAMMA * (rep + 1));
        k = mix64(k + GAMMA * (stream + 1));
        return k;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace gesched
