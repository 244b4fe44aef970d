// Adam with bias correction, keyed to a network's stable parameter order.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "panforge/nn/layer.hpp"

namespace panforge {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers aligned one-to-one with a parameter list, plus
/// the shared step counter.
template <typename Real>
class AdamState {
 public:
  AdamState() = default;

  explicit AdamState(const std::vector<NamedTensor<Real>>& params, AdamConfig cfg = {})
      : cfg_(cfg) {
    moments_.reserve(params.size() * 2);
    for (const auto& p : params) {
      moments_.push_back({p.name + ".adam_m", Tensor<Real>::zeros(p.tensor.shape())});
      moments_.push_back({p.name + ".adam_v", Tensor<Real>::zeros(p.tensor.shape())});
    }
  }

  /// One Adam update over `params` (which must be the list the state was
  /// built from). Consumes gradients; the caller zeroes them afterwards.
  void step(std::vector<NamedTensor<Real>>& params) {
    if (params.size() * 2 != moments_.size())
      throw ContractError("adam state holds " + std::to_string(moments_.size() / 2) +
                          " parameters but step received " + std::to_string(params.size()));
    std::string missing;
    for (const auto& p : params)
      if (!p.tensor.has_grad()) missing += missing.empty() ? p.name : ", " + p.name;
    if (!missing.empty())
      throw ContractError("adam step with unpopulated gradients: " + missing);

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].tensor;
      auto& m = moments_[2 * i].tensor;
      auto& v = moments_[2 * i + 1].tensor;
      if (m.shape() != p.shape())
        throw ContractError("adam moment shape " + m.shape().to_string() +
                            " does not match parameter " + params[i].name + " " +
                            p.shape().to_string());
      Real* pv = p.data();
      const Real* gv = p.grad().data();
      Real* mv = m.data();
      Real* vv = v.data();
      const std::int64_t n = p.size();
      for (std::int64_t j = 0; j < n; ++j) {
        const double gj = static_cast<double>(gv[j]);
        const double mj = cfg_.beta1 * static_cast<double>(mv[j]) + (1.0 - cfg_.beta1) * gj;
        const double vj = cfg_.beta2 * static_cast<double>(vv[j]) + (1.0 - cfg_.beta2) * gj * gj;
        mv[j] = static_cast<Real>(mj);
        vv[j] = static_cast<Real>(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        pv[j] = static_cast<Real>(static_cast<double>(pv[j]) -
                                  cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }
  const AdamConfig& config() const { return cfg_; }
  std::vector<NamedTensor<Real>>& moments() { return moments_; }
  const std::vector<NamedTensor<Real>>& moments() const { return moments_; }

 private:
  AdamConfig cfg_;
  std::vector<NamedTensor<Real>> moments_;
  std::int64_t t_ = 0;
};

}  // namespace panforge
