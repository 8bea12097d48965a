#pragma once

/**
 * @file
 * @brief Counter-based standard-normal draws for reproducible simulations.
 *
 * Draw (seed, step, channel, index) is a pure function of its arguments:
 * SplitMix64 hashes the counter into two uniforms which Box–Muller maps to a
 * normal. Reruns are bit-identical and independent of draw order.
 */

#include "actinf/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

namespace actinf::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform in (0, 1) from the top 53 bits; never returns 0.
inline double to_open_unit(std::uint64_t bits)
{
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

class CounterNormal
{
public:
  explicit CounterNormal(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double draw(std::uint64_t step, std::uint64_t channel, std::uint64_t index) const
  {
    std::uint64_t key = splitmix64(seed_);
    key = splitmix64(key ^ step);
    key = splitmix64(key ^ (channel << 32 | index));
    const double u1 = to_open_unit(splitmix64(key));
    const double u2 = to_open_unit(splitmix64(key ^ 0xD1B54A32D192ED03ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector standard(std::uint64_t step, std::uint64_t channel, Index n) const
  {
    Vector z(n);
    for (Index i = 0; i < n; ++i) { z(i) = draw(step, channel, static_cast<std::uint64_t>(i)); }
    return z;
  }

private:
  std::uint64_t seed_;
};

/// Lower Cholesky factor of a covariance, for sampling L z.
inline Matrix cholesky_factor(const Matrix & covariance)
{
  Eigen::LLT<Matrix> llt(symmetrize(covariance));
  if (llt.info() != Eigen::Success) { throw SingularityError("noise covariance is not positive definite"); }
  return llt.matrixL();
}

}  // namespace actinf::rng
