// Parameter initialization. Kernels draw from Normal(0, 0.02); everything
// else starts at the batchnorm identity.
#pragma once

#include "panforge/core/rng.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge {

template <typename Real>
inline void fill_normal(Tensor<Real>& t, Rng& rng, double stddev) {
  for (auto& v : t.values()) v = static_cast<Real>(rng.gaussian(0.0, stddev));
}

inline constexpr double kKernelInitStddev = 0.02;

}  // namespace panforge
