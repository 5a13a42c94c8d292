#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "vtformer/numkit/tensor.hpp"

namespace vtformer::num {

using Rng = std::mt19937_64;

// Uniform in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform in +-sqrt(6 / (fan_in + fan_out)), shape fan_in x fan_out.
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace vtformer::num
