#pragma once

#include <cstdint>
#include <random>

namespace vrpseg {

/// Deterministic RNG wrapper. All sampling helpers are implemented on top of
/// raw mt19937_64 output so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [lo, hi], inclusive. Rejection sampling, unbiased.
    int uniform_int(int lo, int hi);

    /// Uniform double in [0, 1).
    double uniform_real();

    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * uniform_real();
    }

    /// Standard normal via Box-Muller.
    double gaussian();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Mixes a base seed with a stream index (splitmix64 finalizer) so that
/// per-episode / per-tensor seeds are decorrelated but reproducible.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace vrpseg
