// Flatten and the single-output fully connected head.
#pragma once

#include <cstring>

#include "panforge/core/graph.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge {

/// Reshape to [N, F] keeping the batch dimension.
template <typename Real>
Tensor<Real> flatten(Graph<Real>& g, const Tensor<Real>& x) {
  if (x.rank() < 2) throw ShapeError("flatten: need a batch dimension, got " + x.shape().to_string());
  const int n = x.dim(0);
  const int f = static_cast<int>(x.size() / n);
  Tensor<Real> y = Tensor<Real>::from(Shape{n, f}, x.values());
  detail::record<Real>(g, "flatten", y, {&x}, [x = x, y]() mutable {
    const Real* gy = y.grad().data();
    Real* gx = x.grad().data();
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i];
  });
  PANFORGE_CHECK_FINITE(y, "flatten");
  return y;
}

/// Affine map per batch row: [N,F] x [F,1] + [1] -> [N,1].
template <typename Real>
Tensor<Real> fully_connected(Graph<Real>& g, const Tensor<Real>& x, const Tensor<Real>& weight,
                             const Tensor<Real>& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || weight.dim(1) != 1)
    throw ShapeError("fully_connected: need x [N,F] and weight [F,1], got " + x.shape().to_string() +
                     " and " + weight.shape().to_string());
  if (x.dim(1) != weight.dim(0))
    throw ShapeError("fully_connected: feature length mismatch, x " + x.shape().to_string() +
                     " vs weight " + weight.shape().to_string());
  if (bias.size() != 1) throw ShapeError("fully_connected: bias must be [1], got " + bias.shape().to_string());
  const int n = x.dim(0), f = x.dim(1);
  Tensor<Real> y(Shape{n, 1});
  const Real* xs = x.data();
  const Real* ws = weight.data();
  const Real b = bias.data()[0];
  for (int i = 0; i < n; ++i) {
    double acc = 0;
    const Real* row = xs + static_cast<std::int64_t>(i) * f;
    for (int j = 0; j < f; ++j) acc += static_cast<double>(row[j]) * static_cast<double>(ws[j]);
    y.data()[i] = static_cast<Real>(acc) + b;
  }
  detail::record<Real>(g, "fully_connected", y, {&x, &weight, &bias}, [x = x, weight = weight, bias = bias, y]() mutable {
    const int n = x.dim(0), f = x.dim(1);
    const Real* gy = y.grad().data();
    const Real* xs = x.data();
    const Real* ws = weight.data();
    Real* gx = x.requires_grad() ? x.grad().data() : nullptr;
    Real* gw = weight.requires_grad() ? weight.grad().data() : nullptr;
    Real* gb = bias.requires_grad() ? bias.grad().data() : nullptr;
    for (int i = 0; i < n; ++i) {
      const Real gyi = gy[i];
      const Real* row = xs + static_cast<std::int64_t>(i) * f;
      if (gx) {
        Real* grow = gx + static_cast<std::int64_t>(i) * f;
        for (int j = 0; j < f; ++j) grow[j] += gyi * ws[j];
      }
      if (gw)
        for (int j = 0; j < f; ++j) gw[j] += gyi * row[j];
      if (gb) gb[0] += gyi;
    }
  });
  PANFORGE_CHECK_FINITE(y, "fully_connected");
  return y;
}

}  // namespace panforge
