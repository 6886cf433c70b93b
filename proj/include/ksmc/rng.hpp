#pragma once

#include <cstdint>

namespace ksmc {

// Philox4x32-10 counter block. Exposed for tests; normal use goes through
// RngStream below.
struct PhiloxBlock {
    std::uint32_t x[4];
};

PhiloxBlock philox4x32(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                       std::uint32_t c3, std::uint64_t key);

// Stream identifiers. Every draw site in the library owns one value so that
// no two sites can ever collide on a counter.
enum class RngDomain : std::uint32_t {
    ensemble_init = 1,
    truth_init = 2,
    truth_process = 3,
    truth_obs_brownian = 4,
    truth_obs_algebraic = 5,
    truth_glint_select = 6,
    filter_predict = 7,
    enkf_perturb = 8,
    abs_propagate = 9,
    abs_resample = 10,
};

// Counter-based random stream: each draw is a pure function of
// (seed, domain, time_index, particle_index, draw_index). Identical addresses
// give identical values no matter how many threads ask or in what order,
// which is what makes whole campaigns replay byte-exactly.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Uniform on [0, 1) with 53 random mantissa bits.
    double uniform(RngDomain d, std::uint64_t time_index,
                   std::uint64_t particle, std::uint64_t draw) const;

    // Standard normal via Box-Muller on one counter block.
    double normal(RngDomain d, std::uint64_t time_index,
                  std::uint64_t particle, std::uint64_t draw) const;

  private:
    std::uint64_t seed_;
};

}  // namespace ksmc
