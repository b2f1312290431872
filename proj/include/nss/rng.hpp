#pragma once

#include <cstdint>
#include <vector>

namespace nss {

// Counter-free splitmix64 generator. Chosen over std::mt19937 because the
// standard distributions are implementation-defined, and reports must be
// byte-identical across toolchains. Substreams derived from (seed, index)
// let per-element work parallelize without losing determinism.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + 0x1F123BB5159A55E5ULL) {}

    // Substream for element `index` of a master seed.
    Rng(uint64_t seed, uint64_t index)
        : Rng(mix(seed ^ mix(index + 0x632BE59BD9B4E019ULL))) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    float next_float() {
        return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    float uniform_float(float lo, float hi) { return lo + (hi - lo) * next_float(); }

    // Uniform integer in [0, n). Rejection-free Lemire-style reduction.
    uint64_t uniform_int(uint64_t n) {
        // 128-bit multiply keeps the bias below 2^-64, irrelevant at our scales.
        return static_cast<uint64_t>(
            (static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64);
    }

    bool coin_flip() { return (next_u64() & 1ULL) != 0; }

    // Fisher-Yates shuffle, deterministic for a given state.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    uint64_t state_;
};

}  // namespace nss
