#pragma once

// Shared plumbing: schema errors, FNV-1a hashing, a splitmix64-based RNG,
// and fixed-format float printing. Everything here is deterministic across
// platforms -- no std:: distributions, no locale-dependent formatting.

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace notesampler {

// Malformed input (bad JSONL, bad config, bad CLI usage). The CLI maps this
// to exit code 2; plain std::runtime_error stays exit code 1.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

// Streaming FNV-1a-64. Feed bytes incrementally so n-gram hashing never has
// to materialize joined strings.
struct Fnv1a64 {
    uint64_t state = kFnvOffset;

    void update(std::string_view bytes) {
        uint64_t h = state;
        for (unsigned char c : bytes) {
            h ^= c;
            h *= kFnvPrime;
        }
        state = h;
    }
    void update_byte(unsigned char c) {
        state = (state ^ c) * kFnvPrime;
    }
    uint64_t digest() const { return state; }
};

inline uint64_t fnv1a64(std::string_view bytes) {
    Fnv1a64 h;
    h.update(bytes);
    return h.digest();
}

// splitmix64 finalizer; good avalanche, used for seed mixing.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic counter-free PRNG (splitmix64 stream). Identical sequences on
// every platform for a given seed, unlike std::mt19937 + std:: distributions.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // Independent substream: same (seed, index) -> same stream, regardless of
    // what any other stream consumed. Basis for per-record / per-resample RNG.
    static Rng stream(uint64_t seed, uint64_t index) {
        return Rng(mix64(seed ^ mix64(index ^ 0x9e3779b97f4a7c15ull)));
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64_raw(state_);
    }

    // Uniform in [0, 1): top 53 bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, bound); bound > 0. Lemire-style rejection, unbiased.
    uint64_t next_below(uint64_t bound) {
        // 2^64 mod bound == (-bound) mod bound for the rejection threshold.
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    bool next_bool(double p_true) { return next_double() < p_true; }

    // Fisher-Yates, high-to-low, using next_below.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t mix64_raw(uint64_t x) {
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }
    uint64_t state_;
};

// Locale-independent fixed formatting ("%.6f" style) for CSV/JSON output.
inline std::string format_fixed(double v, int decimals = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return std::string(buf);
}

}  // namespace notesampler
