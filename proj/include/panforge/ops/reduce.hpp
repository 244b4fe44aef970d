// Scalar-producing reductions. Sums run serially in double so results are
// bit-stable for any thread count.
#pragma once

#include <cmath>

#include "panforge/core/graph.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge {

/// Mean over all elements.
template <typename Real>
Tensor<Real> reduce_mean(Graph<Real>& g, const Tensor<Real>& x) {
  const std::int64_t n = x.size();
  double acc = 0;
  const Real* xs = x.data();
  for (std::int64_t i = 0; i < n; ++i) acc += static_cast<double>(xs[i]);
  Tensor<Real> y = Tensor<Real>::scalar(static_cast<Real>(acc / static_cast<double>(n)));
  detail::record<Real>(g, "reduce_mean", y, {&x}, [x = x, y]() mutable {
    const Real gy = y.grad()[0];
    const std::int64_t n = x.size();
    const Real w = gy / static_cast<Real>(n);
    Real* gx = x.grad().data();
    for (std::int64_t i = 0; i < n; ++i) gx[i] += w;
  });
  PANFORGE_CHECK_FINITE(y, "reduce_mean");
  return y;
}

/// Mean absolute difference, mean_i |a_i - b_i|. Subgradient 0 at ties.
template <typename Real>
Tensor<Real> reduce_mean_abs_diff(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("reduce_mean_abs_diff: shapes differ, " + a.shape().to_string() + " vs " +
                     b.shape().to_string());
  const std::int64_t n = a.size();
  const Real* as = a.data();
  const Real* bs = b.data();
  double acc = 0;
  for (std::int64_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(as[i]) - static_cast<double>(bs[i]));
  Tensor<Real> y = Tensor<Real>::scalar(static_cast<Real>(acc / static_cast<double>(n)));
  detail::record<Real>(g, "reduce_mean_abs_diff", y, {&a, &b}, [a = a, b = b, y]() mutable {
    const Real gy = y.grad()[0];
    const std::int64_t n = a.size();
    const Real w = gy / static_cast<Real>(n);
    const Real* as = a.data();
    const Real* bs = b.data();
    Real* ga = a.requires_grad() ? a.grad().data() : nullptr;
    Real* gb = b.requires_grad() ? b.grad().data() : nullptr;
    for (std::int64_t i = 0; i < n; ++i) {
      const Real d = as[i] - bs[i];
      const Real s = d > Real(0) ? w : (d < Real(0) ? -w : Real(0));
      if (ga) ga[i] += s;
      if (gb) gb[i] -= s;
    }
  });
  PANFORGE_CHECK_FINITE(y, "reduce_mean_abs_diff");
  return y;
}

/// Mean squared difference, mean_i (a_i - b_i)^2.
template <typename Real>
Tensor<Real> reduce_mean_sq_diff(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("reduce_mean_sq_diff: shapes differ, " + a.shape().to_string() + " vs " +
                     b.shape().to_string());
  const std::int64_t n = a.size();
  const Real* as = a.data();
  const Real* bs = b.data();
  double acc = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(as[i]) - static_cast<double>(bs[i]);
    acc += d * d;
  }
  Tensor<Real> y = Tensor<Real>::scalar(static_cast<Real>(acc / static_cast<double>(n)));
  detail::record<Real>(g, "reduce_mean_sq_diff", y, {&a, &b}, [a = a, b = b, y]() mutable {
    const Real gy = y.grad()[0];
    const std::int64_t n = a.size();
    const Real w = Real(2) * gy / static_cast<Real>(n);
    const Real* as = a.data();
    const Real* bs = b.data();
    Real* ga = a.requires_grad() ? a.grad().data() : nullptr;
    Real* gb = b.requires_grad() ? b.grad().data() : nullptr;
    for (std::int64_t i = 0; i < n; ++i) {
      const Real d = w * (as[i] - bs[i]);
      if (ga) ga[i] += d;
      if (gb) gb[i] -= d;
    }
  });
  PANFORGE_CHECK_FINITE(y, "reduce_mean_sq_diff");
  return y;
}

/// Sum over all elements.
template <typename Real>
Tensor<Real> reduce_sum(Graph<Real>& g, const Tensor<Real>& x) {
  const std::int64_t n = x.size();
  double acc = 0;
  const Real* xs = x.data();
  for (std::int64_t i = 0; i < n; ++i) acc += static_cast<double>(xs[i]);
  Tensor<Real> y = Tensor<Real>::scalar(static_cast<Real>(acc));
  detail::record<Real>(g, "reduce_sum", y, {&x}, [x = x, y]() mutable {
    const Real gy = y.grad()[0];
    Real* gx = x.grad().data();
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i) gx[i] += gy;
  });
  PANFORGE_CHECK_FINITE(y, "reduce_sum");
  return y;
}

}  // namespace panforge
