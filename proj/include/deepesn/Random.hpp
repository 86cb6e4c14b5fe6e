#pragma once

#include <cstdint>
#include <random>

namespace deepesn {

/// Uniform generator with a platform-independent draw sequence. The
/// mt19937_64 output is fixed by the standard; the mapping to reals is done
/// here instead of through std::uniform_real_distribution, whose algorithm
/// is implementation defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)); }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace deepesn
