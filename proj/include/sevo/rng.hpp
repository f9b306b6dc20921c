#pragma once

#include <cstdint>
#include <random>

namespace sevo {

// Seeded generator with platform-independent draws. std::mt19937_64 output is
// fixed by the standard; the distributions built on it here are too, unlike
// the std:: distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller; one value per call.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
};

// Derives an independent stream seed from a parent seed and a tag. Used to give
// every episode, trial and cell its own generator so that results do not depend
// on execution order.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag_a, std::uint64_t tag_b) {
    return derive_seed(derive_seed(parent, tag_a), tag_b);
}

} // namespace sevo
