#pragma once

#include <random>

#include "salgan/diffcore/array.hpp"
#include "salgan/rng.hpp"

SALGAN_NAMESPACE_BEGIN
namespace models {

inline void fill_normal(diff::DenseArray& a, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& v : a.storage()) v = static_cast<Real>(normal(rng));
}

/// Normal draws re-sampled until within two standard deviations.
inline void fill_truncated_normal(diff::DenseArray& a, Rng& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : a.storage()) {
    double x = normal(rng);
    while (x < -2.0 || x > 2.0) x = normal(rng);
    v = static_cast<Real>(x * stddev);
  }
}

}  // namespace models
SALGAN_NAMESPACE_END
