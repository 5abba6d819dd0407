#pragma once
// Per-index random streams so results do not depend on scheduling.

#include <cstdint>
#include <random>

namespace achart {

std::uint64_t splitmix64(std::uint64_t x);

/// Independent generator for sample `index` under `seed`.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& g);
/// Standard normal via Box-Muller (implementation-independent).
double normal01(std::mt19937_64& g);

}  // namespace achart
