// Elementwise differentiable primitives.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "panforge/core/graph.hpp"
#include "panforge/core/parallel.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge {

enum class Act { relu, lrelu, tanh, sigmoid };

inline const char* act_name(Act a) {
  switch (a) {
    case Act::relu: return "relu";
    case Act::lrelu: return "lrelu";
    case Act::tanh: return "tanh";
    case Act::sigmoid: return "sigmoid";
  }
  return "?";
}

/// Elementwise activation. lrelu(x) = x for x > 0 else slope*x.
template <typename Real>
Tensor<Real> activation(Graph<Real>& g, const Tensor<Real>& x, Act kind, Real slope = Real(0.2)) {
  Tensor<Real> y(x.shape());
  const Real* xs = x.data();
  Real* ys = y.data();
  const std::int64_t n = x.size();
  switch (kind) {
    case Act::relu:
      parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) ys[i] = xs[i] > Real(0) ? xs[i] : Real(0);
      });
      break;
    case Act::lrelu:
      parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) ys[i] = xs[i] > Real(0) ? xs[i] : slope * xs[i];
      });
      break;
    case Act::tanh:
      parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) ys[i] = std::tanh(xs[i]);
      });
      break;
    case Act::sigmoid:
      parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) ys[i] = Real(1) / (Real(1) + std::exp(-xs[i]));
      });
      break;
  }
  detail::record<Real>(g, act_name(kind), y, {&x}, [x = x, y, kind, slope]() mutable {
    const Real* xs = x.data();
    const Real* ys = y.data();
    const Real* gy = y.grad().data();
    Real* gx = x.grad().data();
    const std::int64_t n = x.size();
    switch (kind) {
      case Act::relu:
        parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
          for (std::int64_t i = b; i < e; ++i) gx[i] += xs[i] > Real(0) ? gy[i] : Real(0);
        });
        break;
      case Act::lrelu:
        parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
          for (std::int64_t i = b; i < e; ++i) gx[i] += xs[i] > Real(0) ? gy[i] : slope * gy[i];
        });
        break;
      case Act::tanh:
        parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
          for (std::int64_t i = b; i < e; ++i) gx[i] += (Real(1) - ys[i] * ys[i]) * gy[i];
        });
        break;
      case Act::sigmoid:
        parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
          for (std::int64_t i = b; i < e; ++i) gx[i] += ys[i] * (Real(1) - ys[i]) * gy[i];
        });
        break;
    }
  });
  PANFORGE_CHECK_FINITE(y, act_name(kind));
  return y;
}

/// y = scale*x + shift.
template <typename Real>
Tensor<Real> affine(Graph<Real>& g, const Tensor<Real>& x, Real scale, Real shift) {
  Tensor<Real> y(x.shape());
  const Real* xs = x.data();
  Real* ys = y.data();
  const std::int64_t n = x.size();
  parallel_chunks(n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) ys[i] = scale * xs[i] + shift;
  });
  detail::record<Real>(g, "affine", y, {&x}, [x = x, y, scale]() mutable {
    const Real* gy = y.grad().data();
    Real* gx = x.grad().data();
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i) gx[i] += scale * gy[i];
  });
  PANFORGE_CHECK_FINITE(y, "affine");
  return y;
}

/// Elementwise sum of two same-shape tensors.
template <typename Real>
Tensor<Real> add(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("add: shapes differ, " + a.shape().to_string() + " vs " + b.shape().to_string());
  Tensor<Real> y(a.shape());
  const Real* as = a.data();
  const Real* bs = b.data();
  Real* ys = y.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) ys[i] = as[i] + bs[i];
  detail::record<Real>(g, "add", y, {&a, &b}, [a = a, b = b, y]() mutable {
    const Real* gy = y.grad().data();
    const std::int64_t n = y.size();
    if (a.requires_grad()) {
      Real* ga = a.grad().data();
      for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i];
    }
    if (b.requires_grad()) {
      Real* gb = b.grad().data();
      for (std::int64_t i = 0; i < n; ++i) gb[i] += gy[i];
    }
  });
  PANFORGE_CHECK_FINITE(y, "add");
  return y;
}

/// Elementwise product of two same-shape tensors.
template <typename Real>
Tensor<Real> mul(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("mul: shapes differ, " + a.shape().to_string() + " vs " + b.shape().to_string());
  Tensor<Real> y(a.shape());
  const Real* as = a.data();
  const Real* bs = b.data();
  Real* ys = y.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) ys[i] = as[i] * bs[i];
  detail::record<Real>(g, "mul", y, {&a, &b}, [a = a, b = b, y]() mutable {
    const Real* gy = y.grad().data();
    const Real* as = a.data();
    const Real* bs = b.data();
    const std::int64_t n = y.size();
    if (a.requires_grad()) {
      Real* ga = a.grad().data();
      for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i] * bs[i];
    }
    if (b.requires_grad()) {
      Real* gb = b.grad().data();
      for (std::int64_t i = 0; i < n; ++i) gb[i] += gy[i] * as[i];
    }
  });
  PANFORGE_CHECK_FINITE(y, "mul");
  return y;
}

/// Clamp to [lo, hi]; subgradient 0 outside and at the boundaries.
template <typename Real>
Tensor<Real> clamp(Graph<Real>& g, const Tensor<Real>& x, Real lo, Real hi) {
  Tensor<Real> y(x.shape());
  const Real* xs = x.data();
  Real* ys = y.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) ys[i] = std::min(hi, std::max(lo, xs[i]));
  detail::record<Real>(g, "clamp", y, {&x}, [x = x, y, lo, hi]() mutable {
    const Real* xs = x.data();
    const Real* gy = y.grad().data();
    Real* gx = x.grad().data();
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i)
      if (xs[i] > lo && xs[i] < hi) gx[i] += gy[i];
  });
  PANFORGE_CHECK_FINITE(y, "clamp");
  return y;
}

/// Natural log. The domain is the caller's responsibility; probabilities go
/// through clamp(p, 1e-7, 1 - 1e-7) first.
template <typename Real>
Tensor<Real> log(Graph<Real>& g, const Tensor<Real>& x) {
  Tensor<Real> y(x.shape());
  const Real* xs = x.data();
  Real* ys = y.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) ys[i] = std::log(xs[i]);
  detail::record<Real>(g, "log", y, {&x}, [x = x, y]() mutable {
    const Real* xs = x.data();
    const Real* gy = y.grad().data();
    Real* gx = x.grad().data();
    const std::int64_t n = x.size();
    for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] / xs[i];
  });
  PANFORGE_CHECK_FINITE(y, "log");
  return y;
}

}  // namespace panforge
