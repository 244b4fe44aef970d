// Channel-axis concatenation and slicing for NCHW tensors.
#pragma once

#include <cstring>

#include "panforge/core/graph.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge {

namespace detail {

template <typename Real>
inline void require_nchw(const Tensor<Real>& t, const char* op) {
  if (t.rank() != 4) throw ShapeError(std::string(op) + ": expected NCHW tensor, got " + t.shape().to_string());
}

}  // namespace detail

/// [N,Ca,H,W] ++ [N,Cb,H,W] -> [N,Ca+Cb,H,W], a's channels first.
template <typename Real>
Tensor<Real> concat_channels(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::require_nchw(a, "concat_channels");
  detail::require_nchw(b, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw ShapeError("concat_channels: batch/spatial mismatch, " + a.shape().to_string() + " vs " +
                     b.shape().to_string());
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  Tensor<Real> y(Shape{n, ca + cb, h, w});
  for (int i = 0; i < n; ++i) {
    std::memcpy(y.data() + (static_cast<std::int64_t>(i) * (ca + cb)) * plane,
                a.data() + (static_cast<std::int64_t>(i) * ca) * plane,
                sizeof(Real) * static_cast<std::size_t>(ca * plane));
    std::memcpy(y.data() + (static_cast<std::int64_t>(i) * (ca + cb) + ca) * plane,
                b.data() + (static_cast<std::int64_t>(i) * cb) * plane,
                sizeof(Real) * static_cast<std::size_t>(cb * plane));
  }
  detail::record<Real>(g, "concat_channels", y, {&a, &b}, [a = a, b = b, y]() mutable {
    const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(a.dim(2)) * a.dim(3);
    const Real* gy = y.grad().data();
    for (int i = 0; i < n; ++i) {
      const Real* ga_src = gy + (static_cast<std::int64_t>(i) * (ca + cb)) * plane;
      const Real* gb_src = gy + (static_cast<std::int64_t>(i) * (ca + cb) + ca) * plane;
      if (a.requires_grad()) {
        Real* ga = a.grad().data() + (static_cast<std::int64_t>(i) * ca) * plane;
        for (std::int64_t j = 0; j < ca * plane; ++j) ga[j] += ga_src[j];
      }
      if (b.requires_grad()) {
        Real* gb = b.grad().data() + (static_cast<std::int64_t>(i) * cb) * plane;
        for (std::int64_t j = 0; j < cb * plane; ++j) gb[j] += gb_src[j];
      }
    }
  });
  PANFORGE_CHECK_FINITE(y, "concat_channels");
  return y;
}

/// Channels [c0, c1) of an NCHW tensor.
template <typename Real>
Tensor<Real> slice_channels(Graph<Real>& g, const Tensor<Real>& x, int c0, int c1) {
  detail::require_nchw(x, "slice_channels");
  if (c0 < 0 || c1 <= c0 || c1 > x.dim(1))
    throw ShapeError("slice_channels: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") outside " + x.shape().to_string());
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), cs = c1 - c0;
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  Tensor<Real> y(Shape{n, cs, h, w});
  for (int i = 0; i < n; ++i)
    std::memcpy(y.data() + (static_cast<std::int64_t>(i) * cs) * plane,
                x.data() + (static_cast<std::int64_t>(i) * c + c0) * plane,
                sizeof(Real) * static_cast<std::size_t>(cs * plane));
  detail::record<Real>(g, "slice_channels", y, {&x}, [x = x, y, c0]() mutable {
    const int n = x.dim(0), c = x.dim(1), cs = y.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    const Real* gy = y.grad().data();
    Real* gx = x.grad().data();
    for (int i = 0; i < n; ++i) {
      const Real* src = gy + (static_cast<std::int64_t>(i) * cs) * plane;
      Real* dst = gx + (static_cast<std::int64_t>(i) * c + c0) * plane;
      for (std::int64_t j = 0; j < cs * plane; ++j) dst[j] += src[j];
    }
  });
  PANFORGE_CHECK_FINITE(y, "slice_channels");
  return y;
}

}  // namespace panforge
