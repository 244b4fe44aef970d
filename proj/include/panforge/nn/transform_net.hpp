// The image transformation network: a 6-stage stride-2 encoder into a
// mirrored transposed-convolution decoder, with channel-concatenation skip
// connections between rows 7<->5, 8<->4, 9<->3 and 10<->2, ending in tanh.
#pragma once

#include <string>
#include <vector>

#include "panforge/nn/layer.hpp"

namespace panforge {

/// Exact channel scaling as a fraction, so configurations round-trip through
/// text without float drift.
struct WidthMult {
  int num = 1;
  int den = 1;

  int apply(int channels) const { return std::max(1, channels * num / den); }
  double as_double() const { return static_cast<double>(num) / den; }
  std::string to_string() const { return std::to_string(num) + "/" + std::to_string(den); }

  static WidthMult parse(const std::string& text);  // defined in cli/config.hpp

  bool operator==(const WidthMult& o) const { return num * o.den == o.num * den; }
};

inline void validate_width_mult(const WidthMult& m) {
  if (m.num < 1 || m.den < 1 || m.num > m.den)
    throw ConfigError("width multiplier must be a rational in (0,1], got " + m.to_string());
}

template <typename Real>
class TransformNet {
 public:
  /// Channel plan of Table I scaled by `mult` (the 3-channel output is fixed).
  static TransformNet build(int height, int width, WidthMult mult, std::uint64_t seed) {
    validate_width_mult(mult);
    if (height % 64 != 0 || width % 64 != 0)
      throw ConfigError("transform net input extents must be divisible by 64 "
                        "(six stride-2 encoder stages), got " +
                        std::to_string(height) + "x" + std::to_string(width));
    if (64 * mult.num / mult.den < 1)
      throw ConfigError("width multiplier " + mult.to_string() + " collapses 64 channels below 1");

    TransformNet net;
    net.height_ = height;
    net.width_ = width;
    net.mult_ = mult;
    Rng rng(mix_seed(seed, 0x54));

    const auto m = [&](int c) { return mult.apply(c); };
    const auto conv = [](int cin, int cout, std::optional<Act> pre, bool bn,
                         std::optional<Act> post) {
      return LayerSpec{ConvKind::conv, cin, cout, 3, 2, 1, bn, pre, post};
    };
    const auto deconv = [](int cin, int cout, bool bn, std::optional<Act> post) {
      return LayerSpec{ConvKind::deconv, cin, cout, 4, 2, 1, bn, std::nullopt, post};
    };

    std::vector<LayerSpec> rows = {
        conv(3, m(64), std::nullopt, false, Act::lrelu),
        conv(m(64), m(128), std::nullopt, true, std::nullopt),
        conv(m(128), m(256), Act::lrelu, true, std::nullopt),
        conv(m(256), m(512), Act::lrelu, true, std::nullopt),
        conv(m(512), m(512), Act::lrelu, true, std::nullopt),
        conv(m(512), m(512), Act::lrelu, true, Act::lrelu),
        deconv(m(512), m(512), true, std::nullopt),
        deconv(m(512) + m(512), m(256), true, std::nullopt),
        deconv(m(256) + m(512), m(128), true, std::nullopt),
        deconv(m(128) + m(256), m(64), true, std::nullopt),
        deconv(m(64) + m(128), m(64), true, Act::relu),
        deconv(m(64), 3, false, Act::tanh),
    };
    net.layers_.reserve(rows.size());
    for (const auto& spec : rows) net.layers_.push_back(ConvLayer<Real>::init(spec, rng));
    return net;
  }

  Tensor<Real> forward(Graph<Real>& g, const Tensor<Real>& x, Mode mode) {
    return forward_traced(g, x, mode, nullptr);
  }

  /// Forward pass that optionally reports each row's output (the values the
  /// skip connections see).
  Tensor<Real> forward_traced(Graph<Real>& g, const Tensor<Real>& x, Mode mode,
                              std::vector<Tensor<Real>>* traces) {
    if (x.rank() != 4 || x.dim(1) != 3)
      throw ShapeError("transform net expects [N,3,H,W] input, got " + x.shape().to_string());
    if (x.dim(2) % 64 != 0 || x.dim(3) % 64 != 0)
      throw ConfigError("transform net input extents must be divisible by 64, got " +
                        x.shape().to_string());

    std::vector<Tensor<Real>> row_out(layers_.size());
    const auto run = [&](int idx, const Tensor<Real>& in) {
      row_out[static_cast<std::size_t>(idx - 1)] = layers_[static_cast<std::size_t>(idx - 1)]
                                                       .forward(g, in, mode, idx);
      return row_out[static_cast<std::size_t>(idx - 1)];
    };
    const auto skip_join = [&](const Tensor<Real>& decoded, int encoder_row) {
      return activation(g, concat_channels(g, decoded, row_out[static_cast<std::size_t>(encoder_row - 1)]),
                        Act::relu);
    };

    Tensor<Real> h = run(1, x);
    for (int idx = 2; idx <= 6; ++idx) h = run(idx, h);
    h = skip_join(run(7, h), 5);
    h = skip_join(run(8, h), 4);
    h = skip_join(run(9, h), 3);
    h = skip_join(run(10, h), 2);
    h = run(11, h);
    h = run(12, h);
    if (traces) *traces = row_out;
    return h;
  }

  std::vector<NamedTensor<Real>> parameters(const std::string& prefix = "T") const {
    std::vector<NamedTensor<Real>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i].collect_params(prefix + ".layer" + two_digit(i + 1), out);
    return out;
  }

  std::vector<NamedTensor<Real>> state_tensors(const std::string& prefix = "T") const {
    std::vector<NamedTensor<Real>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i].collect_state(prefix + ".layer" + two_digit(i + 1), out);
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

  int height() const { return height_; }
  int width() const { return width_; }
  const WidthMult& width_mult() const { return mult_; }
  std::vector<ConvLayer<Real>>& layers() { return layers_; }

  static std::string two_digit(std::size_t i) {
    return (i < 10 ? "0" : "") + std::to_string(i);
  }

 private:
  int height_ = 0, width_ = 0;
  WidthMult mult_;
  std::vector<ConvLayer<Real>> layers_;
};

}  // namespace panforge
