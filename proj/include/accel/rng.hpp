#pragma once

#include <cstdint>
#include <string_view>

namespace accel::rng {

// Seeded random stream with labeled splitting. Every consumer derives its own
// stream from a parent by `split(label)` or `substream(index)`, both of which
// depend only on the parent's seed (never on how much the parent has been
// consumed). Adding a consumer with a fresh label therefore never perturbs the
// draws of existing consumers, and per-sample substreams make Monte-Carlo
// loops reproducible under any sharding.
//
// The generator is the SplitMix64 sequence: one 64-bit mix per draw.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform on the open interval (0, 1); never returns an exact endpoint,
    // so inverse-CDF transforms stay finite.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Child stream keyed by a label; stable under parent consumption.
    [[nodiscard]] RngStream split(std::string_view label) const {
        return RngStream(mix(seed_ ^ fnv1a(label)));
    }

    // Child stream keyed by an index (for per-sample / per-shard streams).
    [[nodiscard]] RngStream substream(std::uint64_t index) const {
        return RngStream(mix(seed_ ^ mix((index + 1) * 0xD6E8FEB86659FD93ULL)));
    }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return h;
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

}  // namespace accel::rng
