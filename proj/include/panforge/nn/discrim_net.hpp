// The discriminative network: nine convolution rows (five of them stride 2),
// feature taps after rows 1, 4, 6 and 8, then a flattened single-sigmoid
// head that scores how real the input looks.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "panforge/nn/layer.hpp"
#include "panforge/nn/transform_net.hpp"

namespace panforge {

template <typename Real>
struct DiscrimOut {
  Tensor<Real> prob;                  // [N,1], strictly inside (0,1)
  std::array<Tensor<Real>, 4> feats;  // tap rows 1, 4, 6, 8, in network order
};

template <typename Real>
class DiscrimNet {
 public:
  static constexpr std::array<int, 4> kTapRows = {1, 4, 6, 8};

  /// Table II channels scaled by `mult`; the 8-channel row 9 stays fixed so
  /// the flatten width is always 8*(H/32)*(W/32).
  static DiscrimNet build(int height, int width, WidthMult mult, std::uint64_t seed) {
    validate_width_mult(mult);
    if (height % 32 != 0 || width % 32 != 0)
      throw ConfigError("discriminative net input extents must be divisible by 32 "
                        "(five stride-2 stages), got " +
                        std::to_string(height) + "x" + std::to_string(width));

    DiscrimNet net;
    net.height_ = height;
    net.width_ = width;
    net.mult_ = mult;
    Rng rng(mix_seed(seed, 0x44));

    const auto m = [&](int c) { return mult.apply(c); };
    const auto conv = [](int cin, int cout, int stride, bool bn) {
      return LayerSpec{ConvKind::conv, cin, cout, 3, stride, 1, bn, std::nullopt, Act::lrelu};
    };
    std::vector<LayerSpec> rows = {
        conv(3, m(64), 1, false),        conv(m(64), m(128), 2, true),
        conv(m(128), m(128), 1, true),   conv(m(128), m(256), 2, true),
        conv(m(256), m(256), 1, true),   conv(m(256), m(512), 2, true),
        conv(m(512), m(512), 1, true),   conv(m(512), m(512), 2, true),
        conv(m(512), 8, 2, false),
    };
    net.layers_.reserve(rows.size());
    for (const auto& spec : rows) net.layers_.push_back(ConvLayer<Real>::init(spec, rng));

    net.flatten_dim_ = 8 * (height / 32) * (width / 32);
    net.fc_weight_ = Tensor<Real>(Shape{net.flatten_dim_, 1});
    fill_normal(net.fc_weight_, rng, kKernelInitStddev);
    net.fc_bias_ = Tensor<Real>::zeros(Shape{1});
    net.fc_weight_.set_requires_grad(true);
    net.fc_bias_.set_requires_grad(true);
    return net;
  }

  DiscrimOut<Real> forward(Graph<Real>& g, const Tensor<Real>& img, Mode mode) {
    if (img.rank() != 4 || img.dim(1) != 3)
      throw ShapeError("discriminative net expects [N,3,H,W] input, got " + img.shape().to_string());
    if (img.dim(2) != height_ || img.dim(3) != width_)
      throw ShapeError("discriminative net was built for " + std::to_string(height_) + "x" +
                       std::to_string(width_) + " inputs, got " + img.shape().to_string());
    DiscrimOut<Real> out;
    Tensor<Real> h = img;
    std::size_t tap = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i].forward(g, h, mode, static_cast<int>(i + 1));
      if (tap < kTapRows.size() && static_cast<int>(i + 1) == kTapRows[tap])
        out.feats[tap++] = h;
    }
    auto logits = fully_connected(g, flatten(g, h), fc_weight_, fc_bias_);
    out.prob = clamp(g, activation(g, logits, Act::sigmoid), Real(1e-7), Real(1) - Real(1e-7));
    return out;
  }

  std::vector<NamedTensor<Real>> parameters(const std::string& prefix = "D") const {
    std::vector<NamedTensor<Real>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i].collect_params(prefix + ".layer" + TransformNet<Real>::two_digit(i + 1), out);
    out.push_back({prefix + ".fc.weight", fc_weight_});
    out.push_back({prefix + ".fc.bias", fc_bias_});
    return out;
  }

  std::vector<NamedTensor<Real>> state_tensors(const std::string& prefix = "D") const {
    std::vector<NamedTensor<Real>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i].collect_state(prefix + ".layer" + TransformNet<Real>::two_digit(i + 1), out);
    return out;
  }

  std::int64_t bn_batches_seen() const {
    std::int64_t n = 0;
    for (const auto& l : layers_)
      if (l.spec.batchnorm) n = std::max(n, l.bn_state.batches_seen);
    return n;
  }
  void set_bn_batches_seen(std::int64_t n) {
    for (auto& l : layers_)
      if (l.spec.batchnorm) l.bn_state.batches_seen = n;
  }

  int flatten_dim() const { return flatten_dim_; }
  int height() const { return height_; }
  int width() const { return width_; }
  const WidthMult& width_mult() const { return mult_; }
  std::vector<ConvLayer<Real>>& layers() { return layers_; }

 private:
  int height_ = 0, width_ = 0, flatten_dim_ = 0;
  WidthMult mult_;
  std::vector<ConvLayer<Real>> layers_;
  Tensor<Real> fc_weight_, fc_bias_;
};

}  // namespace panforge
