#include "l2pub/rng.hpp"

#include <cmath>
#include <numbers>

namespace l2pub {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream) : engine_(seeded_engine(master_seed, stream)) {}

double Rng::standard_normal() {
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace l2pub
