// Central finite-difference oracle for analytic gradients. Lives in test code
// and never looks at the backward rules it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "panforge/tensor_ops.hpp"

namespace pftest {

using panforge::Graph;
using panforge::Rng;
using panforge::Shape;
using panforge::Tensor;

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

/// `forward` must rebuild the same scalar loss from the leaves on every call
/// (fresh internal state, no side effects that outlive the call). Returns the
/// worst relative error between analytic and central-difference gradients
/// over every element of every leaf.
inline double max_grad_rel_error(const std::vector<Tensor<double>*>& leaves,
                                 const std::function<Tensor<double>(Graph<double>&)>& forward,
                                 double step = 1e-4) {
  for (auto* t : leaves) {
    t->set_requires_grad(true);
    t->drop_grad();
  }
  Graph<double> g;
  Tensor<double> loss = forward(g);
  g.backward(loss);

  const auto eval = [&](void) -> double {
    Graph<double> quiet;
    quiet.set_recording(false);
    return forward(quiet).value();
  };

  double worst = 0;
  for (auto* t : leaves) {
    auto& vals = t->values();
    const auto& grads = t->grad();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + step;
      const double up = eval();
      vals[i] = keep - step;
      const double down = eval();
      vals[i] = keep;
      const double fd = (up - down) / (2 * step);
      const double analytic = grads.empty() ? 0.0 : grads[i];
      worst = std::max(worst, rel_err(analytic, fd));
    }
  }
  for (auto* t : leaves) t->drop_grad();
  return worst;
}

inline Tensor<double> rand_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(shape.numel()));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor<double>::from(std::move(shape), std::move(v));
}

/// Random values in [lo, hi] kept at least `margin` away from `kink`, so
/// finite differences never straddle a non-smooth point.
inline Tensor<double> rand_tensor_away(Rng& rng, Shape shape, double kink, double margin,
                                       double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(shape.numel()));
  for (auto& x : v) {
    do {
      x = rng.uniform(lo, hi);
    } while (std::abs(x - kink) < margin);
  }
  return Tensor<double>::from(std::move(shape), std::move(v));
}

/// Scalarizes a tensor with fixed random weights: sum_i w_i * y_i. A plain
/// sum would feed every output the same gradient and hide misrouted terms.
inline Tensor<double> weighted_sum(Graph<double>& g, const Tensor<double>& y,
                                   const Tensor<double>& w) {
  return panforge::reduce_sum(g, panforge::mul(g, y, w));
}

}  // namespace pftest
