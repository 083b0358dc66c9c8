#pragma once

#include <random>

#include "vpblab/cache.hpp"

namespace testing_support {

/// Shared small assembly for the unit suite: degree 6, 2^19 quasi-random
/// samples, disk-cached under the build directory so repeated runs are fast.
inline const vpblab::CollisionAssembly& assembly6() {
  static const vpblab::CollisionAssembly asmbl = [] {
    const vpblab::BasisSet basis(6);
    return vpblab::assemble_cached(basis, 1 << 19, 42, 0, "test_cache");
  }();
  return asmbl;
}

inline vpblab::VelocityFunction random_function(const vpblab::BasisSet& basis,
                                                std::mt19937_64& rng,
                                                bool complex_valued = true) {
  std::normal_distribution<double> gauss;
  vpblab::VelocityFunction f(basis.dimension());
  for (int i = 0; i < basis.dimension(); ++i)
    f[i] = vpblab::Complex(gauss(rng), complex_valued ? gauss(rng) : 0.0);
  return f;
}

/// Smooth (low-degree) random function; used where oracles need moderate
/// variance.
inline vpblab::VelocityFunction random_smooth(const vpblab::BasisSet& basis,
                                              std::mt19937_64& rng, int max_degree) {
  std::normal_distribution<double> gauss;
  vpblab::VelocityFunction f = vpblab::VelocityFunction::Zero(basis.dimension());
  for (int i = 0; i < basis.dimension(); ++i)
    if (basis.total_degree(i) <= max_degree) f[i] = gauss(rng);
  return f;
}

}  // namespace testing_support
