#pragma once

#include <cstdint>
#include <random>

namespace edgellm {

using Rng = std::mt19937_64;

// Independent streams so that one component's draws never shift another's.
enum class RngStream : std::uint64_t {
  kWorkload = 1,
  kRouter = 2,
  kDeployer = 3,
  kPlanner = 4,
  kScheduler = 5,
  kCalibration = 6,
};

inline Rng make_rng(std::uint64_t seed, RngStream stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace edgellm
