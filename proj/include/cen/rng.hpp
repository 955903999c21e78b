#pragma once

#include <cstdint>

namespace cen {

// xoshiro256** seeded through splitmix64. A fixed, documented algorithm so
// experiment runs replay bit-exactly from a seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller (one cached spare draw).
    double normal();

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // Derive an independent stream (seed mixed with the stream index).
    Rng split(std::uint64_t stream) const;

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
    std::uint64_t seed_;
};

}  // namespace cen
