// Seeded procedural paired tasks: streak corruption over smooth backgrounds,
// center-square inpainting, and flat label maps rendered into shaded shapes.
// Every generator is a pure function of (seed, parameters).
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "panforge/core/rng.hpp"
#include "panforge/data/image_io.hpp"

namespace panforge::data {

struct PairedSample {
  ImageTensor input;   // [3,H,W] in [-1,1]
  ImageTensor target;  // [3,H,W] in [-1,1]
  std::string id;
  std::string task;
};

namespace detail {

inline float clamp_unit(double v) { return static_cast<float>(std::min(1.0, std::max(-1.0, v))); }

/// hsv (h in [0,1)) to rgb in [-1,1].
inline void hsv_to_rgb(double h, double s, double v, float out[3]) {
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1.0 - s), q = v * (1.0 - f * s), t = v * (1.0 - (1.0 - f) * s);
  double r, g, b;
  switch (static_cast<int>(i) % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  out[0] = clamp_unit(2.0 * r - 1.0);
  out[1] = clamp_unit(2.0 * g - 1.0);
  out[2] = clamp_unit(2.0 * b - 1.0);
}

/// Smooth scene: bilinear corner gradient plus a few soft-edged ellipses.
inline ImageTensor smooth_background(Rng& rng, int h, int w) {
  ImageTensor img(Shape{3, h, w});
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  double corners[4][3];
  for (auto& corner : corners)
    for (double& c : corner) c = rng.uniform(-0.7, 0.5);
  for (int y = 0; y < h; ++y) {
    const double fy = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    for (int x = 0; x < w; ++x) {
      const double fx = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      for (int c = 0; c < 3; ++c) {
        const double top = corners[0][c] * (1 - fx) + corners[1][c] * fx;
        const double bot = corners[2][c] * (1 - fx) + corners[3][c] * fx;
        img.values()[c * plane + y * w + x] = clamp_unit(top * (1 - fy) + bot * fy);
      }
    }
  }
  const int shapes = 2 + static_cast<int>(rng.uniform_int(3));
  for (int sidx = 0; sidx < shapes; ++sidx) {
    const double cx = rng.uniform(0.1, 0.9) * w;
    const double cy = rng.uniform(0.1, 0.9) * h;
    const double rx = rng.uniform(0.08, 0.3) * w;
    const double ry = rng.uniform(0.08, 0.3) * h;
    double color[3];
    for (double& c : color) c = rng.uniform(-0.6, 0.6);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        const double d = dx * dx + dy * dy;
        if (d > 2.25) continue;
        const double alpha = 1.0 / (1.0 + std::exp(8.0 * (d - 1.0)));  // soft edge
        for (int c = 0; c < 3; ++c) {
          float& v = img.values()[c * plane + y * w + x];
          v = clamp_unit(v + alpha * (color[c] - v));
        }
      }
  }
  return img;
}

}  // namespace detail

struct StreakParams {
  double density = 0.01;  // streaks per pixel
  double length_min = 8.0, length_max = 22.0;
  double angle_min_deg = -15.0, angle_max_deg = 15.0;  // tilt from vertical
  double intensity_min = 0.35, intensity_max = 0.85;
};

/// Smooth scene plus oriented bright streaks alpha-blended over it.
inline PairedSample gen_streak_pair(std::uint64_t seed, int h, int w,
                                    const StreakParams& p = {}) {
  if (h % 64 != 0 || w % 64 != 0)
    throw ConfigError("streak pair size must be divisible by 64, got " + std::to_string(h) + "x" +
                      std::to_string(w));
  Rng rng(mix_seed(seed, 0x5354));
  PairedSample sample;
  sample.task = "streak";
  sample.id = "streak_" + std::to_string(seed);
  sample.target = detail::smooth_background(rng, h, w);
  sample.input = sample.target.deep_copy();

  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  const long streaks = std::lround(p.density * h * w);
  constexpr double kStreakBrightness = 0.9;
  for (long i = 0; i < streaks; ++i) {
    const double cx = rng.uniform(0.0, w);
    const double cy = rng.uniform(0.0, h);
    const double len = rng.uniform(p.length_min, p.length_max);
    const double angle = rng.uniform(p.angle_min_deg, p.angle_max_deg) * 3.14159265358979 / 180.0;
    const double dx = std::sin(angle), dy = std::cos(angle);
    const double alpha = rng.uniform(p.intensity_min, p.intensity_max);
    for (double t = -len / 2; t <= len / 2; t += 0.5) {
      const double px = cx + t * dx, py = cy + t * dy;
      const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
      for (int oy = 0; oy <= 1; ++oy)
        for (int ox = 0; ox <= 1; ++ox) {
          const int x = x0 + ox, y = y0 + oy;
          if (x < 0 || x >= w || y < 0 || y >= h) continue;
          const double wx = 1.0 - std::abs(px - x), wy = 1.0 - std::abs(py - y);
          const double a = alpha * std::max(0.0, wx) * std::max(0.0, wy) * 0.5;
          for (int c = 0; c < 3; ++c) {
            float& v = sample.input.values()[c * plane + y * w + x];
            v = detail::clamp_unit(v + a * (kStreakBrightness - v));
          }
        }
    }
  }
  return sample;
}

/// Smooth scene with a centered square of side hole_fraction*H zeroed out
/// (mid-gray in [-1,1] space). The id records the hole geometry.
inline PairedSample gen_inpaint_pair(std::uint64_t seed, int h, int w, double hole_fraction) {
  if (hole_fraction <= 0.0 || hole_fraction >= 1.0)
    throw ConfigError("hole_fraction must lie in (0,1), got " + std::to_string(hole_fraction));
  if (h % 64 != 0 || w % 64 != 0)
    throw ConfigError("inpaint pair size must be divisible by 64, got " + std::to_string(h) + "x" +
                      std::to_string(w));
  Rng rng(mix_seed(seed, 0x4950));
  PairedSample sample;
  sample.task = "inpaint";
  sample.target = detail::smooth_background(rng, h, w);
  sample.input = sample.target.deep_copy();

  const int side = static_cast<int>(std::lround(hole_fraction * h));
  const int y0 = (h - side) / 2, x0 = (w - side) / 2;
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int c = 0; c < 3; ++c)
    for (int y = y0; y < y0 + side; ++y)
      for (int x = x0; x < x0 + side; ++x) sample.input.values()[c * plane + y * w + x] = 0.0f;
  sample.id = "inpaint_" + std::to_string(seed) + "_hole" + std::to_string(side) + "at" +
              std::to_string(y0) + "," + std::to_string(x0);
  return sample;
}

/// Class id per pixel: background 0, shapes 1..n_shapes painted in order.
inline std::vector<int> gen_label_layout(std::uint64_t seed, int h, int w, int n_shapes) {
  if (n_shapes < 1) throw ConfigError("n_shapes must be at least 1");
  Rng rng(mix_seed(seed, 0x4c41));
  std::vector<int> classes(static_cast<std::size_t>(h) * w, 0);
  for (int k = 1; k <= n_shapes; ++k) {
    const bool ellipse = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.15, 0.85) * w;
    const double cy = rng.uniform(0.15, 0.85) * h;
    const double rx = rng.uniform(0.08, 0.28) * w;
    const double ry = rng.uniform(0.08, 0.28) * h;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        bool inside;
        if (ellipse) {
          const double dx = (x - cx) / rx, dy = (y - cy) / ry;
          inside = dx * dx + dy * dy <= 1.0;
        } else {
          inside = std::abs(x - cx) <= rx && std::abs(y - cy) <= ry;
        }
        if (inside) classes[static_cast<std::size_t>(y) * w + x] = k;
      }
  }
  return classes;
}

namespace detail {

inline void label_color(int k, float out[3]) {
  const double hue = std::fmod((k + 1) * 0.61803398875, 1.0);
  hsv_to_rgb(hue, 0.75, 0.85, out);
}

/// Per-class shaded texture under a fixed diagonal lighting gradient;
/// a pure function of (class, x, y).
inline void shape_texture(int k, int x, int y, int h, int w, float out[3]) {
  const double hue = std::fmod((k + 1) * 0.61803398875 + 0.33, 1.0);
  float base[3];
  hsv_to_rgb(hue, 0.55, 0.75, base);
  const double freq = 0.15 + 0.08 * (k % 5);
  const double angle = 0.7 * k;
  const double wave = 0.18 * std::sin(freq * (x * std::cos(angle) + y * std::sin(angle)));
  const double light = 0.75 + 0.5 * (static_cast<double>(x) + y) / (w + h);
  for (int c = 0; c < 3; ++c) {
    const double v01 = ((base[c] + wave) + 1.0) / 2.0;
    out[c] = clamp_unit(2.0 * (v01 * light) - 1.0);
  }
}

}  // namespace detail

/// Flat per-class label colors in, textured rendering of the same layout out.
inline PairedSample gen_label_shape_pair(std::uint64_t seed, int h, int w, int n_shapes) {
  if (h % 64 != 0 || w % 64 != 0)
    throw ConfigError("label pair size must be divisible by 64, got " + std::to_string(h) + "x" +
                      std::to_string(w));
  const std::vector<int> classes = gen_label_layout(seed, h, w, n_shapes);
  PairedSample sample;
  sample.task = "labels";
  sample.id = "labels_" + std::to_string(seed);
  sample.input = ImageTensor(Shape{3, h, w});
  sample.target = ImageTensor(Shape{3, h, w});
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int k = classes[static_cast<std::size_t>(y) * w + x];
      float flat[3], tex[3];
      detail::label_color(k, flat);
      detail::shape_texture(k, x, y, h, w, tex);
      for (int c = 0; c < 3; ++c) {
        sample.input.values()[c * plane + y * w + x] = flat[c];
        sample.target.values()[c * plane + y * w + x] = tex[c];
      }
    }
  return sample;
}

}  // namespace panforge::data
