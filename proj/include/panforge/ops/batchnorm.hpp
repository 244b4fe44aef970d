// Per-channel batch normalization with running statistics.
#pragma once

#include <cmath>
#include <vector>

#include "panforge/core/graph.hpp"
#include "panforge/core/parallel.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge {

enum class Mode { train, infer };

template <typename Real>
struct BatchNormState {
  Tensor<Real> running_mean;
  Tensor<Real> running_var;
  std::int64_t batches_seen = 0;

  static BatchNormState fresh(int channels) {
    BatchNormState s;
    s.running_mean = Tensor<Real>::zeros(Shape{channels});
    s.running_var = Tensor<Real>::full(Shape{channels}, Real(1));
    return s;
  }
};

/// Train mode normalizes with the batch's per-channel mean and population
/// variance, then scales by gamma and shifts by beta, and folds the batch
/// statistics into the running averages. Infer mode normalizes with the
/// running statistics and requires at least one prior training batch.
template <typename Real>
Tensor<Real> batch_norm(Graph<Real>& g, const Tensor<Real>& x, const Tensor<Real>& gamma,
                        const Tensor<Real>& beta, BatchNormState<Real>& state, Mode mode,
                        Real eps = Real(1e-5), Real momentum = Real(0.9)) {
  if (x.rank() != 4) throw ShapeError("batch_norm: expected NCHW tensor, got " + x.shape().to_string());
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (gamma.size() != c || beta.size() != c)
    throw ShapeError("batch_norm: gamma/beta must have " + std::to_string(c) + " channels");
  if (mode == Mode::infer && state.batches_seen == 0)
    throw StateError("batch_norm: infer mode requested but running statistics were never populated");

  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  const std::int64_t m = static_cast<std::int64_t>(n) * plane;
  Tensor<Real> y(x.shape());
  std::vector<Real> mean(static_cast<std::size_t>(c)), inv_std(static_cast<std::size_t>(c));

  if (mode == Mode::train) {
    parallel_for(c, [&](std::int64_t ci) {
      double sum = 0, sum_sq = 0;
      for (int i = 0; i < n; ++i) {
        const Real* src = x.data() + (static_cast<std::int64_t>(i) * c + ci) * plane;
        for (std::int64_t j = 0; j < plane; ++j) {
          const double v = static_cast<double>(src[j]);
          sum += v;
          sum_sq += v * v;
        }
      }
      const double mu = sum / static_cast<double>(m);
      double var = sum_sq / static_cast<double>(m) - mu * mu;
      if (var < 0) var = 0;
      const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
      mean[static_cast<std::size_t>(ci)] = static_cast<Real>(mu);
      inv_std[static_cast<std::size_t>(ci)] = static_cast<Real>(inv);
      const Real ga = gamma.data()[ci], be = beta.data()[ci];
      for (int i = 0; i < n; ++i) {
        const Real* src = x.data() + (static_cast<std::int64_t>(i) * c + ci) * plane;
        Real* dst = y.data() + (static_cast<std::int64_t>(i) * c + ci) * plane;
        for (std::int64_t j = 0; j < plane; ++j)
          dst[j] = ga * (src[j] - static_cast<Real>(mu)) * static_cast<Real>(inv) + be;
      }
      Real& rm = state.running_mean.data()[ci];
      Real& rv = state.running_var.data()[ci];
      rm = momentum * rm + (Real(1) - momentum) * static_cast<Real>(mu);
      rv = momentum * rv + (Real(1) - momentum) * static_cast<Real>(var);
    });
    state.batches_seen++;
  } else {
    parallel_for(c, [&](std::int64_t ci) {
      const double mu = static_cast<double>(state.running_mean.data()[ci]);
      const double var = static_cast<double>(state.running_var.data()[ci]);
      const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
      mean[static_cast<std::size_t>(ci)] = static_cast<Real>(mu);
      inv_std[static_cast<std::size_t>(ci)] = static_cast<Real>(inv);
      const Real ga = gamma.data()[ci], be = beta.data()[ci];
      for (int i = 0; i < n; ++i) {
        const Real* src = x.data() + (static_cast<std::int64_t>(i) * c + ci) * plane;
        Real* dst = y.data() + (static_cast<std::int64_t>(i) * c + ci) * plane;
        for (std::int64_t j = 0; j < plane; ++j)
          dst[j] = ga * (src[j] - static_cast<Real>(mu)) * static_cast<Real>(inv) + be;
      }
    });
  }

  const char* tag = mode == Mode::train ? "batch_norm_train" : "batch_norm_infer";
  detail::record<Real>(g, tag, y, {&x, &gamma, &beta}, [x = x, gamma = gamma, beta = beta, y, mean, inv_std, mode]() mutable {
    const int n = x.dim(0), c = x.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    const std::int64_t m = static_cast<std::int64_t>(n) * plane;
    const Real* gy = y.grad().data();
    Real* gx = x.requires_grad() ? x.grad().data() : nullptr;
    Real* gga = gamma.requires_grad() ? gamma.grad().data() : nullptr;
    Real* gbe = beta.requires_grad() ? beta.grad().data() : nullptr;
    parallel_for(c, [&](std::int64_t ci) {
      const Real mu = mean[static_cast<std::size_t>(ci)];
      const Real inv = inv_std[static_cast<std::size_t>(ci)];
      const Real ga = gamma.data()[ci];
      double sum_gy = 0, sum_gy_xhat = 0;
      for (int i = 0; i < n; ++i) {
        const std::int64_t off = (static_cast<std::int64_t>(i) * c + ci) * plane;
        const Real* xs = x.data() + off;
        const Real* gys = gy + off;
        for (std::int64_t j = 0; j < plane; ++j) {
          const double xhat = static_cast<double>((xs[j] - mu) * inv);
          sum_gy += static_cast<double>(gys[j]);
          sum_gy_xhat += static_cast<double>(gys[j]) * xhat;
        }
      }
      if (gga) gga[ci] += static_cast<Real>(sum_gy_xhat);
      if (gbe) gbe[ci] += static_cast<Real>(sum_gy);
      if (gx) {
        if (mode == Mode::train) {
          const Real mean_gy = static_cast<Real>(sum_gy / static_cast<double>(m));
          const Real mean_gy_xhat = static_cast<Real>(sum_gy_xhat / static_cast<double>(m));
          for (int i = 0; i < n; ++i) {
            const std::int64_t off = (static_cast<std::int64_t>(i) * c + ci) * plane;
            const Real* xs = x.data() + off;
            const Real* gys = gy + off;
            Real* gxs = gx + off;
            for (std::int64_t j = 0; j < plane; ++j) {
              const Real xhat = (xs[j] - mu) * inv;
              gxs[j] += ga * inv * (gys[j] - mean_gy - xhat * mean_gy_xhat);
            }
          }
        } else {
          for (int i = 0; i < n; ++i) {
            const std::int64_t off = (static_cast<std::int64_t>(i) * c + ci) * plane;
            const Real* gys = gy + off;
            Real* gxs = gx + off;
            for (std::int64_t j = 0; j < plane; ++j) gxs[j] += ga * inv * gys[j];
          }
        }
      }
    });
  });
  PANFORGE_CHECK_FINITE(y, tag);
  return y;
}

}  // namespace panforge
