#pragma once

#include <cstdint>
#include <random>

namespace gslam {

using Rng = std::mt19937_64;

// Independent stream for (seed, particle, step). Serial and parallel runs
// draw the same numbers because no stream is shared between particles.
inline Rng substream(std::uint64_t seed, std::uint64_t particle, std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(particle), static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(step >> 32), 0x67736c61u};
  return Rng(seq);
}

}  // namespace gslam
