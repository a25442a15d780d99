#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dafa {

using Rng = std::mt19937_64;

/// Fills `m` with independent draws from U[-bound, bound].
template <typename Derived>
void fill_uniform(Eigen::DenseBase<Derived>& m, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
}

inline double uniform_scalar(double bound, Rng& rng) {
  return std::uniform_real_distribution<double>(-bound, bound)(rng);
}

/// Bound for the usual U[-1/sqrt(fan_in), 1/sqrt(fan_in)] initializer.
inline double fan_in_bound(Eigen::Index fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

}  // namespace dafa
