// Training objectives: the generative adversarial terms, the lambda-weighted
// perceptual distance over discriminator feature taps, its positive-margin
// hinge, the joint losses of both networks, and the ablation variants.
#pragma once

#include <array>
#include <optional>
#include <string>

#include "panforge/tensor_ops.hpp"

namespace panforge {

enum class LossVariant { pan, l2, l2_gan };

inline const char* variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::pan: return "pan";
    case LossVariant::l2: return "l2";
    case LossVariant::l2_gan: return "l2_gan";
  }
  return "?";
}

template <typename Real>
struct LossConfig {
  std::array<Real, 4> lambdas = {Real(5), Real(1.5), Real(1.5), Real(5)};
  Real margin = Real(13);
  LossVariant variant = LossVariant::pan;
  Real pixel_weight = Real(100);  // weight of the pixel term in l2_gan

  void validate() const {
    for (Real l : lambdas)
      if (l < Real(0)) throw ConfigError("loss lambdas must be nonnegative");
    if (margin <= Real(0)) throw ConfigError("loss margin must be positive");
    if (variant == LossVariant::pan) {
      bool any = false;
      for (Real l : lambdas) any = any || l > Real(0);
      if (!any) throw ConfigError("pan variant needs at least one positive lambda");
    }
    if (pixel_weight < Real(0)) throw ConfigError("pixel_weight must be nonnegative");
  }
};

// Probabilities are clamped to [kProbEps, 1 - kProbEps] before any logarithm.
inline constexpr double kProbEps = 1e-7;

namespace detail {

/// mean over the batch of log(p), with the documented clamp.
template <typename Real>
Tensor<Real> mean_log(Graph<Real>& g, const Tensor<Real>& p) {
  return reduce_mean(g, panforge::log(g, clamp(g, p, Real(kProbEps), Real(1) - Real(kProbEps))));
}

/// mean over the batch of log(1 - p).
template <typename Real>
Tensor<Real> mean_log_one_minus(Graph<Real>& g, const Tensor<Real>& p) {
  return mean_log(g, affine(g, p, Real(-1), Real(1)));
}

}  // namespace detail

/// Weighted sum of per-tap L1 feature distances:
/// s = sum_i lambda_i * mean|feats_real_i - feats_fake_i|.
template <typename Real>
Tensor<Real> perceptual_distance(Graph<Real>& g, const std::array<Tensor<Real>, 4>& feats_fake,
                                 const std::array<Tensor<Real>, 4>& feats_real,
                                 const std::array<Real, 4>& lambdas) {
  Tensor<Real> total;
  for (std::size_t i = 0; i < 4; ++i) {
    if (feats_fake[i].shape() != feats_real[i].shape())
      throw ShapeError("perceptual_distance: tap " + std::to_string(i + 1) + " shapes differ, " +
                       feats_fake[i].shape().to_string() + " vs " + feats_real[i].shape().to_string());
    if (lambdas[i] == Real(0)) continue;
    auto term = affine(g, reduce_mean_abs_diff(g, feats_real[i], feats_fake[i]), lambdas[i], Real(0));
    total = total.defined() ? add(g, total, term) : term;
  }
  return total.defined() ? total : Tensor<Real>::scalar(Real(0));
}

/// max(0, margin - s): positive while the discriminator's feature taps still
/// see less discrepancy than the margin, identically zero past it.
template <typename Real>
Tensor<Real> hinge(Graph<Real>& g, const Tensor<Real>& s, Real margin) {
  if (margin <= Real(0)) throw ConfigError("hinge margin must be positive");
  return activation(g, affine(g, s, Real(-1), margin), Act::relu);
}

/// Transformation-network objective.
///   pan:    mean log(1 - D(T(x))) + s
///   l2:     pixel_term
///   l2_gan: pixel_weight * pixel_term + mean log(1 - D(T(x)))
template <typename Real>
Tensor<Real> loss_T(Graph<Real>& g, const std::optional<Tensor<Real>>& prob_fake,
                    const std::optional<Tensor<Real>>& s, const LossConfig<Real>& cfg,
                    const std::optional<Tensor<Real>>& pixel_term = std::nullopt) {
  switch (cfg.variant) {
    case LossVariant::pan: {
      if (!prob_fake || !s)
        throw ConfigError("loss_T: pan variant needs prob_fake and the perceptual distance");
      return add(g, detail::mean_log_one_minus(g, *prob_fake), *s);
    }
    case LossVariant::l2: {
      if (!pixel_term) throw ConfigError("loss_T: l2 variant needs the pixel term");
      return *pixel_term;
    }
    case LossVariant::l2_gan: {
      if (!prob_fake || !pixel_term)
        throw ConfigError("loss_T: l2_gan variant needs prob_fake and the pixel term");
      return add(g, affine(g, *pixel_term, cfg.pixel_weight, Real(0)),
                 detail::mean_log_one_minus(g, *prob_fake));
    }
  }
  throw ConfigError("loss_T: unknown variant");
}

/// Discriminative-network objective:
/// mean[-log D(y) - log(1 - D(T(x)))] + max(0, margin - s). Once s exceeds
/// the margin, the third term contributes exactly zero gradient.
template <typename Real>
Tensor<Real> loss_D(Graph<Real>& g, const Tensor<Real>& prob_real, const Tensor<Real>& prob_fake,
                    const Tensor<Real>& s, Real margin) {
  auto real_term = affine(g, detail::mean_log(g, prob_real), Real(-1), Real(0));
  auto fake_term = affine(g, detail::mean_log_one_minus(g, prob_fake), Real(-1), Real(0));
  return add(g, add(g, real_term, fake_term), hinge(g, s, margin));
}

/// Mean squared pixel difference.
template <typename Real>
Tensor<Real> pixel_l2(Graph<Real>& g, const Tensor<Real>& y_hat, const Tensor<Real>& y) {
  return reduce_mean_sq_diff(g, y_hat, y);
}

}  // namespace panforge
