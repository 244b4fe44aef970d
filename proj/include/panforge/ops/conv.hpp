// 2-D convolution (cross-correlation, zero padding) and its transpose.
// Both directions are im2col/col2im plus a GEMM; images of a batch are
// processed in parallel and per-image weight gradients are reduced serially
// in batch order, so results do not depend on the thread count.
#pragma once

#include <string>
#include <vector>

#include "panforge/core/gemm.hpp"
#include "panforge/core/graph.hpp"
#include "panforge/core/parallel.hpp"
#include "panforge/core/tensor.hpp"

namespace panforge {

namespace detail {

inline int conv_out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

inline int deconv_out_extent(int in, int k, int stride, int pad) {
  return (in - 1) * stride - 2 * pad + k;
}

/// Gathers k x k patches of img[c,h,w] into cols[(c*kh*kw) x (hp*wp)], where
/// position (oh,ow) reads img[ci][oh*stride-pad+ky][ow*stride-pad+kx] and
/// out-of-bounds taps are zero.
template <typename Real>
void im2col(const Real* img, int c, int h, int w, int kh, int kw, int stride, int pad, int hp,
            int wp, Real* cols) {
  const std::int64_t positions = static_cast<std::int64_t>(hp) * wp;
  for (int ci = 0; ci < c; ++ci) {
    const Real* plane = img + static_cast<std::int64_t>(ci) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        Real* row = cols + ((static_cast<std::int64_t>(ci) * kh + ky) * kw + kx) * positions;
        for (int oh = 0; oh < hp; ++oh) {
          const int ih = oh * stride - pad + ky;
          Real* dst = row + static_cast<std::int64_t>(oh) * wp;
          if (ih < 0 || ih >= h) {
            for (int ow = 0; ow < wp; ++ow) dst[ow] = Real(0);
            continue;
          }
          const Real* src = plane + static_cast<std::int64_t>(ih) * w;
          for (int ow = 0; ow < wp; ++ow) {
            const int iw = ow * stride - pad + kx;
            dst[ow] = (iw >= 0 && iw < w) ? src[iw] : Real(0);
          }
        }
      }
    }
  }
}

/// Scatter-add inverse of im2col.
template <typename Real>
void col2im_add(const Real* cols, int c, int h, int w, int kh, int kw, int stride, int pad, int hp,
                int wp, Real* img) {
  const std::int64_t positions = static_cast<std::int64_t>(hp) * wp;
  for (int ci = 0; ci < c; ++ci) {
    Real* plane = img + static_cast<std::int64_t>(ci) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const Real* row = cols + ((static_cast<std::int64_t>(ci) * kh + ky) * kw + kx) * positions;
        for (int oh = 0; oh < hp; ++oh) {
          const int ih = oh * stride - pad + ky;
          if (ih < 0 || ih >= h) continue;
          Real* dst = plane + static_cast<std::int64_t>(ih) * w;
          const Real* src = row + static_cast<std::int64_t>(oh) * wp;
          for (int ow = 0; ow < wp; ++ow) {
            const int iw = ow * stride - pad + kx;
            if (iw >= 0 && iw < w) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// conv2d: x [N,Cin,H,W] * kernel [Cout,Cin,kh,kw] + bias [Cout]
/// -> [N,Cout,H',W'] with H' = floor((H + 2*pad - kh)/stride) + 1.
template <typename Real>
Tensor<Real> conv2d(Graph<Real>& g, const Tensor<Real>& x, const Tensor<Real>& kernel,
                    const Tensor<Real>& bias, int stride, int padding) {
  if (x.rank() != 4 || kernel.rank() != 4)
    throw ShapeError("conv2d: need NCHW input and OIHW kernel, got " + x.shape().to_string() +
                     " and " + kernel.shape().to_string());
  if (stride < 1 || padding < 0)
    throw ConfigError("conv2d: stride must be >= 1 and padding >= 0");
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int cout = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != cin)
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) +
                     " input channels but input has " + std::to_string(cin) + " (input " +
                     x.shape().to_string() + ", kernel " + kernel.shape().to_string() + ")");
  if (bias.size() != cout)
    throw ShapeError("conv2d: bias " + bias.shape().to_string() + " does not match " +
                     std::to_string(cout) + " output channels");
  if (h + 2 * padding < kh || w + 2 * padding < kw)
    throw ShapeError("conv2d: padded input " + std::to_string(h + 2 * padding) + "x" +
                     std::to_string(w + 2 * padding) + " smaller than kernel " + std::to_string(kh) +
                     "x" + std::to_string(kw));
  const int ho = detail::conv_out_extent(h, kh, stride, padding);
  const int wo = detail::conv_out_extent(w, kw, stride, padding);
  const std::int64_t kdim = static_cast<std::int64_t>(cin) * kh * kw;
  const std::int64_t positions = static_cast<std::int64_t>(ho) * wo;

  Tensor<Real> y(Shape{n, cout, ho, wo});
  parallel_for(n, [&](std::int64_t i) {
    std::vector<Real> cols(static_cast<std::size_t>(kdim * positions));
    detail::im2col(x.data() + i * cin * h * w, cin, h, w, kh, kw, stride, padding, ho, wo,
                   cols.data());
    Real* yi = y.data() + i * cout * positions;
    detail::gemm_nn(cout, static_cast<int>(kdim), static_cast<int>(positions), kernel.data(),
                    cols.data(), yi, false);
    for (int co = 0; co < cout; ++co) {
      const Real b = bias.data()[co];
      Real* row = yi + static_cast<std::int64_t>(co) * positions;
      for (std::int64_t p = 0; p < positions; ++p) row[p] += b;
    }
  });

  detail::record<Real>(g, "conv2d", y, {&x, &kernel, &bias},
                       [x = x, kernel = kernel, bias = bias, y, stride, padding]() mutable {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int cout = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
    const int ho = y.dim(2), wo = y.dim(3);
    const std::int64_t kdim = static_cast<std::int64_t>(cin) * kh * kw;
    const std::int64_t positions = static_cast<std::int64_t>(ho) * wo;
    const bool need_gx = x.requires_grad();
    const bool need_gk = kernel.requires_grad();
    const bool need_gb = bias.requires_grad();
    const Real* gy = y.grad().data();
    Real* gx = need_gx ? x.grad().data() : nullptr;

    std::vector<std::vector<Real>> gk_scratch(need_gk ? static_cast<std::size_t>(n) : 0);
    std::vector<std::vector<Real>> gb_scratch(need_gb ? static_cast<std::size_t>(n) : 0);
    parallel_for(n, [&](std::int64_t i) {
      const Real* gyi = gy + i * cout * positions;
      std::vector<Real> cols;
      if (need_gk) {
        cols.resize(static_cast<std::size_t>(kdim * positions));
        detail::im2col(x.data() + i * cin * h * w, cin, h, w, kh, kw, stride, padding, ho, wo,
                       cols.data());
        auto& gk = gk_scratch[static_cast<std::size_t>(i)];
        gk.resize(static_cast<std::size_t>(cout * kdim));
        detail::gemm_nt(cout, static_cast<int>(positions), static_cast<int>(kdim), gyi, cols.data(),
                        gk.data(), false);
      }
      if (need_gb) {
        auto& gb = gb_scratch[static_cast<std::size_t>(i)];
        gb.assign(static_cast<std::size_t>(cout), Real(0));
        for (int co = 0; co < cout; ++co) {
          double acc = 0;
          const Real* row = gyi + static_cast<std::int64_t>(co) * positions;
          for (std::int64_t p = 0; p < positions; ++p) acc += static_cast<double>(row[p]);
          gb[static_cast<std::size_t>(co)] = static_cast<Real>(acc);
        }
      }
      if (need_gx) {
        std::vector<Real> gcols(static_cast<std::size_t>(kdim * positions));
        detail::gemm_tn(static_cast<int>(kdim), cout, static_cast<int>(positions), kernel.data(),
                        gyi, gcols.data(), false);
        detail::col2im_add(gcols.data(), cin, h, w, kh, kw, stride, padding, ho, wo,
                           gx + i * cin * h * w);
      }
    });
    if (need_gk) {
      Real* gk = kernel.grad().data();
      for (const auto& s : gk_scratch)
        for (std::size_t j = 0; j < s.size(); ++j) gk[j] += s[j];
    }
    if (need_gb) {
      Real* gb = bias.grad().data();
      for (const auto& s : gb_scratch)
        for (std::size_t j = 0; j < s.size(); ++j) gb[j] += s[j];
    }
  });
  PANFORGE_CHECK_FINITE(y, "conv2d");
  return y;
}

/// conv_transpose2d: x [N,Cin,H,W] * kernel [Cin,Cout,kh,kw] + bias [Cout]
/// -> [N,Cout,H',W'] with H' = (H-1)*stride - 2*pad + kh. The forward pass
/// equals the backward-data pass of conv2d at the same configuration.
template <typename Real>
Tensor<Real> conv_transpose2d(Graph<Real>& g, const Tensor<Real>& x, const Tensor<Real>& kernel,
                              const Tensor<Real>& bias, int stride, int padding) {
  if (x.rank() != 4 || kernel.rank() != 4)
    throw ShapeError("conv_transpose2d: need NCHW input and IOHW kernel, got " +
                     x.shape().to_string() + " and " + kernel.shape().to_string());
  if (stride < 1 || padding < 0)
    throw ConfigError("conv_transpose2d: stride must be >= 1 and padding >= 0");
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int cout = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(0) != cin)
    throw ShapeError("conv_transpose2d: kernel expects " + std::to_string(kernel.dim(0)) +
                     " input channels but input has " + std::to_string(cin) + " (input " +
                     x.shape().to_string() + ", kernel " + kernel.shape().to_string() + ")");
  if (bias.size() != cout)
    throw ShapeError("conv_transpose2d: bias " + bias.shape().to_string() + " does not match " +
                     std::to_string(cout) + " output channels");
  const int ho = detail::deconv_out_extent(h, kh, stride, padding);
  const int wo = detail::deconv_out_extent(w, kw, stride, padding);
  if (ho < 1 || wo < 1)
    throw ShapeError("conv_transpose2d: output extent would be non-positive for input " +
                     x.shape().to_string());
  const std::int64_t kdim = static_cast<std::int64_t>(cout) * kh * kw;
  const std::int64_t positions = static_cast<std::int64_t>(h) * w;

  Tensor<Real> y(Shape{n, cout, ho, wo});
  parallel_for(n, [&](std::int64_t i) {
    std::vector<Real> cols(static_cast<std::size_t>(kdim * positions));
    // cols = kernel^T (viewed [Cin x Cout*kh*kw]) * x_i
    detail::gemm_tn(static_cast<int>(kdim), cin, static_cast<int>(positions), kernel.data(),
                    x.data() + i * cin * positions, cols.data(), false);
    Real* yi = y.data() + i * static_cast<std::int64_t>(cout) * ho * wo;
    detail::col2im_add(cols.data(), cout, ho, wo, kh, kw, stride, padding, h, w, yi);
    for (int co = 0; co < cout; ++co) {
      const Real b = bias.data()[co];
      Real* row = yi + static_cast<std::int64_t>(co) * ho * wo;
      for (std::int64_t p = 0; p < static_cast<std::int64_t>(ho) * wo; ++p) row[p] += b;
    }
  });

  detail::record<Real>(g, "conv_transpose2d", y, {&x, &kernel, &bias},
                       [x = x, kernel = kernel, bias = bias, y, stride, padding]() mutable {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int cout = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
    const int ho = y.dim(2), wo = y.dim(3);
    const std::int64_t kdim = static_cast<std::int64_t>(cout) * kh * kw;
    const std::int64_t positions = static_cast<std::int64_t>(h) * w;
    const bool need_gx = x.requires_grad();
    const bool need_gk = kernel.requires_grad();
    const bool need_gb = bias.requires_grad();
    const Real* gy = y.grad().data();
    Real* gx = need_gx ? x.grad().data() : nullptr;

    std::vector<std::vector<Real>> gk_scratch(need_gk ? static_cast<std::size_t>(n) : 0);
    std::vector<std::vector<Real>> gb_scratch(need_gb ? static_cast<std::size_t>(n) : 0);
    parallel_for(n, [&](std::int64_t i) {
      const Real* gyi = gy + i * static_cast<std::int64_t>(cout) * ho * wo;
      std::vector<Real> dcols(static_cast<std::size_t>(kdim * positions));
      detail::im2col(gyi, cout, ho, wo, kh, kw, stride, padding, h, w, dcols.data());
      if (need_gx)
        detail::gemm_nn(cin, static_cast<int>(kdim), static_cast<int>(positions), kernel.data(),
                        dcols.data(), gx + i * cin * positions, true);
      if (need_gk) {
        auto& gk = gk_scratch[static_cast<std::size_t>(i)];
        gk.resize(static_cast<std::size_t>(cin * kdim));
        detail::gemm_nt(cin, static_cast<int>(positions), static_cast<int>(kdim),
                        x.data() + i * cin * positions, dcols.data(), gk.data(), false);
      }
      if (need_gb) {
        auto& gb = gb_scratch[static_cast<std::size_t>(i)];
        gb.assign(static_cast<std::size_t>(cout), Real(0));
        for (int co = 0; co < cout; ++co) {
          double acc = 0;
          const Real* row = gyi + static_cast<std::int64_t>(co) * ho * wo;
          for (std::int64_t p = 0; p < static_cast<std::int64_t>(ho) * wo; ++p)
            acc += static_cast<double>(row[p]);
          gb[static_cast<std::size_t>(co)] = static_cast<Real>(acc);
        }
      }
    });
    if (need_gk) {
      Real* gk = kernel.grad().data();
      for (const auto& s : gk_scratch)
        for (std::size_t j = 0; j < s.size(); ++j) gk[j] += s[j];
    }
    if (need_gb) {
      Real* gb = bias.grad().data();
      for (const auto& s : gb_scratch)
        for (std::size_t j = 0; j < s.size(); ++j) gb[j] += s[j];
    }
  });
  PANFORGE_CHECK_FINITE(y, "conv_transpose2d");
  return y;
}

}  // namespace panforge
