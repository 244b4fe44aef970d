// Full-reference image quality metrics over [0,1] grayscale images. Color
// inputs are reduced with Rec.601 luma first. All math runs in double.
//
// ssim: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, L=1, valid
//       window positions, population-weighted moments.
// uqi:  8x8 uniform sliding window, population statistics; windows whose
//       denominator falls under 1e-12 use the stabilized form with
//       C1=C2=1e-8.
// vif:  pixel-domain variant. Four scales; at scale s both images are blurred
//       with a Gaussian (sigma 2^(s-1), radius 4*sigma, whole-sample
//       symmetric reflection at borders) and 2x2 mean-pooled, then local
//       moments over valid 3x3 windows accumulate
//           num += log(1 + g^2*var_a/(sv2+eps)),  g = cov/(var_a+1e-10)
//           den += log(1 + var_a/sv2)
//       with sv2 = 2.0, eps = 1e-10; vif = num/den (1 when den is 0).
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "panforge/data/image_io.hpp"

namespace panforge::metrics {

struct Gray {
  int h = 0, w = 0;
  std::vector<double> v;

  Gray() = default;
  Gray(int height, int width) : h(height), w(width), v(static_cast<std::size_t>(height) * width) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

/// [3,H,W] tensor in [-1,1] to luma in [0,1].
inline Gray to_gray(const data::ImageTensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3)
    throw ShapeError("to_gray expects [3,H,W], got " + t.shape().to_string());
  Gray g(t.dim(1), t.dim(2));
  const std::int64_t plane = static_cast<std::int64_t>(g.h) * g.w;
  for (std::int64_t i = 0; i < plane; ++i) {
    const double r = (t.values()[i] + 1.0) / 2.0;
    const double gr = (t.values()[plane + i] + 1.0) / 2.0;
    const double b = (t.values()[2 * plane + i] + 1.0) / 2.0;
    g.v[static_cast<std::size_t>(i)] = data::luma(r, gr, b);
  }
  return g;
}

namespace detail {

inline void require_same_shape(const Gray& a, const Gray& b, const char* op) {
  if (a.h != b.h || a.w != b.w)
    throw ShapeError(std::string(op) + ": image shapes differ, " + std::to_string(a.h) + "x" +
                     std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" + std::to_string(b.w));
}

/// Whole-sample symmetric reflection: ..., 2, 1, 0, 1, 2, ...
inline int mirror(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

inline std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[static_cast<std::size_t>(i + radius)];
  }
  for (double& x : k) x /= sum;
  return k;
}

/// Separable same-size Gaussian blur with reflected borders.
inline Gray gaussian_blur_reflect(const Gray& img, double sigma, int radius) {
  const auto k = gaussian_kernel(sigma, radius);
  Gray tmp(img.h, img.w), out(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] * img.at(y, mirror(x + i, img.w));
      tmp.at(y, x) = acc;
    }
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] * tmp.at(mirror(y + i, img.h), x);
      out.at(y, x) = acc;
    }
  return out;
}

/// 2x2 mean pooling (trailing odd row/column dropped). Block pooling keeps
/// the pyramid invariant under joint flips of even-sized images.
inline Gray decimate2(const Gray& img) {
  Gray out(img.h / 2, img.w / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out.at(y, x) = 0.25 * (img.at(2 * y, 2 * x) + img.at(2 * y, 2 * x + 1) +
                             img.at(2 * y + 1, 2 * x) + img.at(2 * y + 1, 2 * x + 1));
  return out;
}

/// Separable valid-mode weighted convolution used by ssim.
inline Gray valid_filter(const Gray& img, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size());
  Gray tmp(img.h, img.w - r + 1);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x + r <= img.w; ++x) {
      double acc = 0;
      for (int i = 0; i < r; ++i) acc += k[static_cast<std::size_t>(i)] * img.at(y, x + i);
      tmp.at(y, x) = acc;
    }
  Gray out(img.h - r + 1, tmp.w);
  for (int y = 0; y + r <= img.h; ++y)
    for (int x = 0; x < tmp.w; ++x) {
      double acc = 0;
      for (int i = 0; i < r; ++i) acc += k[static_cast<std::size_t>(i)] * tmp.at(y + i, x);
      out.at(y, x) = acc;
    }
  return out;
}

inline Gray pointwise_mul(const Gray& a, const Gray& b) {
  Gray out(a.h, a.w);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

}  // namespace detail

/// 10*log10(peak^2 / MSE); +infinity for identical images.
inline double psnr(const Gray& a, const Gray& b, double peak = 1.0) {
  detail::require_same_shape(a, b, "psnr");
  double mse = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.v.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

inline double ssim(const Gray& a, const Gray& b) {
  detail::require_same_shape(a, b, "ssim");
  constexpr int kWindow = 11;
  if (a.h < kWindow || a.w < kWindow)
    throw ShapeError("ssim: image " + std::to_string(a.h) + "x" + std::to_string(a.w) +
                     " smaller than the 11x11 window");
  constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2
  constexpr double kC2 = 0.03 * 0.03;  // (K2*L)^2
  const auto kernel = detail::gaussian_kernel(1.5, (kWindow - 1) / 2);

  const Gray mu_a = detail::valid_filter(a, kernel);
  const Gray mu_b = detail::valid_filter(b, kernel);
  const Gray aa = detail::valid_filter(detail::pointwise_mul(a, a), kernel);
  const Gray bb = detail::valid_filter(detail::pointwise_mul(b, b), kernel);
  const Gray ab = detail::valid_filter(detail::pointwise_mul(a, b), kernel);

  double total = 0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double va = aa.v[i] - ma * ma;
    const double vb = bb.v[i] - mb * mb;
    const double cov = ab.v[i] - ma * mb;
    total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
             ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
  }
  return total / static_cast<double>(mu_a.v.size());
}

/// Universal quality index of one window given population moments.
inline double uqi_window(double mu_a, double mu_b, double var_a, double var_b, double cov) {
  const double den = (var_a + var_b) * (mu_a * mu_a + mu_b * mu_b);
  if (std::abs(den) < 1e-12) {
    constexpr double kC = 1e-8;  // stabilized fallback for degenerate windows
    return ((2 * mu_a * mu_b + kC) * (2 * cov + kC)) /
           ((mu_a * mu_a + mu_b * mu_b + kC) * (var_a + var_b + kC));
  }
  return 4.0 * cov * mu_a * mu_b / den;
}

inline double uqi(const Gray& a, const Gray& b, int window = 8) {
  detail::require_same_shape(a, b, "uqi");
  if (a.h < window || a.w < window)
    throw ShapeError("uqi: image " + std::to_string(a.h) + "x" + std::to_string(a.w) +
                     " smaller than the " + std::to_string(window) + "x" + std::to_string(window) +
                     " window");
  // summed-area tables over a, b, a^2, b^2, ab
  const int sh = a.h + 1, sw = a.w + 1;
  std::vector<double> sa(static_cast<std::size_t>(sh) * sw, 0), sb = sa, saa = sa, sbb = sa, sab = sa;
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x) {
      const std::size_t up = static_cast<std::size_t>(y) * sw + (x + 1);
      const std::size_t left = static_cast<std::size_t>(y + 1) * sw + x;
      const std::size_t diag = static_cast<std::size_t>(y) * sw + x;
      const std::size_t cur = static_cast<std::size_t>(y + 1) * sw + (x + 1);
      const double av = a.at(y, x), bv = b.at(y, x);
      sa[cur] = av + sa[up] + sa[left] - sa[diag];
      sb[cur] = bv + sb[up] + sb[left] - sb[diag];
      saa[cur] = av * av + saa[up] + saa[left] - saa[diag];
      sbb[cur] = bv * bv + sbb[up] + sbb[left] - sbb[diag];
      sab[cur] = av * bv + sab[up] + sab[left] - sab[diag];
    }
  const auto box = [&](const std::vector<double>& s, int y, int x) {
    return s[static_cast<std::size_t>(y + window) * sw + (x + window)] -
           s[static_cast<std::size_t>(y) * sw + (x + window)] -
           s[static_cast<std::size_t>(y + window) * sw + x] + s[static_cast<std::size_t>(y) * sw + x];
  };

  const double n = static_cast<double>(window) * window;
  double total = 0;
  std::int64_t count = 0;
  for (int y = 0; y + window <= a.h; ++y)
    for (int x = 0; x + window <= a.w; ++x) {
      const double mu_a = box(sa, y, x) / n;
      const double mu_b = box(sb, y, x) / n;
      const double var_a = std::max(0.0, box(saa, y, x) / n - mu_a * mu_a);
      const double var_b = std::max(0.0, box(sbb, y, x) / n - mu_b * mu_b);
      const double cov = box(sab, y, x) / n - mu_a * mu_b;
      total += uqi_window(mu_a, mu_b, var_a, var_b, cov);
      ++count;
    }
  return total / static_cast<double>(count);
}

inline double vif(const Gray& a, const Gray& b) {
  detail::require_same_shape(a, b, "vif");
  if (a.h < 32 || a.w < 32)
    throw ShapeError("vif: image " + std::to_string(a.h) + "x" + std::to_string(a.w) +
                     " smaller than the 32x32 minimum");
  constexpr double kSv2 = 2.0;
  constexpr double kEps = 1e-10;
  Gray ca = a, cb = b;
  double num = 0, den = 0;
  for (int scale = 1; scale <= 4; ++scale) {
    const double sigma = std::pow(2.0, scale - 1);
    const int radius = static_cast<int>(4 * sigma);
    ca = detail::decimate2(detail::gaussian_blur_reflect(ca, sigma, radius));
    cb = detail::decimate2(detail::gaussian_blur_reflect(cb, sigma, radius));
    for (int y = 0; y + 3 <= ca.h; ++y)
      for (int x = 0; x + 3 <= ca.w; ++x) {
        double suma = 0, sumb = 0, sumaa = 0, sumbb = 0, sumab = 0;
        for (int dy = 0; dy < 3; ++dy)
          for (int dx = 0; dx < 3; ++dx) {
            const double av = ca.at(y + dy, x + dx), bv = cb.at(y + dy, x + dx);
            suma += av;
            sumb += bv;
            sumaa += av * av;
            sumbb += bv * bv;
            sumab += av * bv;
          }
        const double mu_a = suma / 9.0, mu_b = sumb / 9.0;
        const double var_a = std::max(0.0, sumaa / 9.0 - mu_a * mu_a);
        const double cov = sumab / 9.0 - mu_a * mu_b;
        const double g = cov / (var_a + 1e-10);
        num += std::log(1.0 + g * g * var_a / (kSv2 + kEps));
        den += std::log(1.0 + var_a / kSv2);
      }
  }
  return den > 0 ? num / den : 1.0;
}

struct MetricRow {
  std::string id;
  double psnr_db = 0, ssim_v = 0, uqi_v = 0, vif_v = 0;
};

inline MetricRow evaluate_pair(const std::string& id, const data::ImageTensor& a,
                               const data::ImageTensor& b) {
  const Gray ga = to_gray(a), gb = to_gray(b);
  return {id, psnr(ga, gb), ssim(ga, gb), uqi(ga, gb), vif(ga, gb)};
}

inline MetricRow mean_row(const std::vector<MetricRow>& rows) {
  MetricRow m{"mean", 0, 0, 0, 0};
  for (const auto& r : rows) {
    m.psnr_db += r.psnr_db;
    m.ssim_v += r.ssim_v;
    m.uqi_v += r.uqi_v;
    m.vif_v += r.vif_v;
  }
  const double n = static_cast<double>(rows.size());
  m.psnr_db /= n;
  m.ssim_v /= n;
  m.uqi_v /= n;
  m.vif_v /= n;
  return m;
}

inline std::string format_row(const MetricRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%.6f\t%.6f", r.id.c_str(), r.psnr_db, r.ssim_v,
                r.uqi_v, r.vif_v);
  return buf;
}

/// Tab-separated report: one row per image plus the final "mean" row.
inline void write_report(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write metric report: " + path.string());
  for (const auto& r : rows) f << format_row(r) << "\n";
  if (!rows.empty()) f << format_row(mean_row(rows)) << "\n";
}

}  // namespace panforge::metrics
