#pragma once

#include <cstdint>
#include <random>

namespace toalab {

// Seedable deterministic random stream. All sampling in the library goes
// through this type so that a given seed reproduces a run bit for bit.
// Each thread must own its stream.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1); never returns 0, safe as a log() argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double normal();

    // Uniform integer on [lo, hi] inclusive, rejection sampled (no modulo bias).
    int uniform_int(int lo, int hi);

    // Fair sign flip.
    double sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

} // namespace toalab
