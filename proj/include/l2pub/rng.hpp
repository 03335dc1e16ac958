#pragma once

#include <cstdint>
#include <random>

namespace l2pub {

// Seeded random source with a fully specified output sequence.
//
// Engine: std::mt19937_64, whose sequence is fixed by the C++ standard.
// Stream derivation: the engine is seeded through std::seed_seq (also fully
// specified) from the 32-bit halves of (master_seed, stream), so each
// (master_seed, episode) pair owns an independent, reproducible stream.
// Uniforms take the top 53 bits; normals use the Box-Muller transform, one
// variate per pair of uniforms, so no sampler state outlives a call.
class Rng {
 public:
  explicit Rng(std::uint64_t master_seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal variate.
  double standard_normal();

  double normal(double mean, double stddev) { return mean + stddev * standard_normal(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace l2pub
