// One table row of either network: an optional pre-activation, a strided
// convolution or transposed convolution, optional batchnorm, and an optional
// post-activation, applied in exactly the order the row writes them.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "panforge/nn/init.hpp"
#include "panforge/tensor_ops.hpp"

namespace panforge {

enum class ConvKind { conv, deconv };

struct LayerSpec {
  ConvKind kind = ConvKind::conv;
  int in_channels = 0;
  int out_channels = 0;
  int ksize = 3;
  int stride = 2;
  int padding = 1;
  bool batchnorm = false;
  std::optional<Act> pre_act;
  std::optional<Act> post_act;
};

/// A named handle onto a learnable (or state) tensor. Copies alias the same
/// buffers, so optimizer updates through the handle hit the layer.
template <typename Real>
struct NamedTensor {
  std::string name;
  Tensor<Real> tensor;
};

template <typename Real>
struct ConvLayer {
  LayerSpec spec;
  Tensor<Real> kernel;  // conv: [out,in,k,k]; deconv: [in,out,k,k]
  Tensor<Real> bias;    // [out]
  Tensor<Real> gamma;   // [out] when batchnorm
  Tensor<Real> beta;    // [out]
  BatchNormState<Real> bn_state;

  static ConvLayer init(const LayerSpec& spec, Rng& rng) {
    ConvLayer layer;
    layer.spec = spec;
    const Shape kshape = spec.kind == ConvKind::conv
                             ? Shape{spec.out_channels, spec.in_channels, spec.ksize, spec.ksize}
                             : Shape{spec.in_channels, spec.out_channels, spec.ksize, spec.ksize};
    layer.kernel = Tensor<Real>(kshape);
    fill_normal(layer.kernel, rng, kKernelInitStddev);
    layer.bias = Tensor<Real>::zeros(Shape{spec.out_channels});
    if (spec.batchnorm) {
      layer.gamma = Tensor<Real>::full(Shape{spec.out_channels}, Real(1));
      layer.beta = Tensor<Real>::zeros(Shape{spec.out_channels});
      layer.bn_state = BatchNormState<Real>::fresh(spec.out_channels);
    }
    layer.set_trainable(true);
    return layer;
  }

  void set_trainable(bool b) {
    kernel.set_requires_grad(b);
    bias.set_requires_grad(b);
    if (spec.batchnorm) {
      gamma.set_requires_grad(b);
      beta.set_requires_grad(b);
    }
  }

  Tensor<Real> forward(Graph<Real>& g, const Tensor<Real>& x, Mode mode, int layer_index) {
    if (x.rank() != 4 || x.dim(1) != spec.in_channels)
      throw ShapeError("layer " + std::to_string(layer_index) + ": expected " +
                       std::to_string(spec.in_channels) + " input channels, got " +
                       x.shape().to_string());
    Tensor<Real> h = x;
    if (spec.pre_act) h = activation(g, h, *spec.pre_act);
    h = spec.kind == ConvKind::conv
            ? conv2d(g, h, kernel, bias, spec.stride, spec.padding)
            : conv_transpose2d(g, h, kernel, bias, spec.stride, spec.padding);
    if (spec.batchnorm) h = batch_norm(g, h, gamma, beta, bn_state, mode);
    if (spec.post_act) h = activation(g, h, *spec.post_act);
    return h;
  }

  /// Learnables in a fixed order; running stats stay out of the optimizer.
  void collect_params(const std::string& prefix, std::vector<NamedTensor<Real>>& out) const {
    out.push_back({prefix + ".kernel", kernel});
    out.push_back({prefix + ".bias", bias});
    if (spec.batchnorm) {
      out.push_back({prefix + ".gamma", gamma});
      out.push_back({prefix + ".beta", beta});
    }
  }

  void collect_state(const std::string& prefix, std::vector<NamedTensor<Real>>& out) const {
    if (spec.batchnorm) {
      out.push_back({prefix + ".running_mean", bn_state.running_mean});
      out.push_back({prefix + ".running_var", bn_state.running_var});
    }
  }
};

}  // namespace panforge
