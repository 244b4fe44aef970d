#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "panforge/core/rng.hpp"
#include "panforge/metrics/quality.hpp"
#include "support/naive_metrics.hpp"

using namespace panforge;
using namespace panforge::metrics;
using Catch::Approx;

namespace {

Gray random_gray(Rng& rng, int h, int w) {
  Gray g(h, w);
  for (auto& v : g.v) v = rng.uniform(0.0, 1.0);
  return g;
}

/// Smooth plus noise: structured content with healthy local variance.
Gray textured_gray(Rng& rng, int h, int w) {
  Gray g(h, w);
  const double fy = rng.uniform(0.1, 0.5), fx = rng.uniform(0.1, 0.5);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      g.at(y, x) = 0.5 + 0.3 * std::sin(fy * y) * std::cos(fx * x) + 0.15 * rng.uniform(-1.0, 1.0);
  for (auto& v : g.v) v = std::min(1.0, std::max(0.0, v));
  return g;
}

Gray flip_h(const Gray& g) {
  Gray out(g.h, g.w);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) out.at(y, x) = g.at(y, g.w - 1 - x);
  return out;
}

Gray constant_gray(int h, int w, double v) {
  Gray g(h, w);
  for (auto& x : g.v) x = v;
  return g;
}

}  // namespace

TEST_CASE("psnr: identical, hand value, monotone under noise") {
  Rng rng(1);
  auto a = random_gray(rng, 16, 16);
  CHECK(std::isinf(psnr(a, a)));

  auto zero = constant_gray(12, 12, 0.0);
  auto half = constant_gray(12, 12, 0.5);
  CHECK(psnr(zero, half) == Approx(6.0206).margin(1e-4));

  auto base = textured_gray(rng, 32, 32);
  double prev = std::numeric_limits<double>::infinity();
  for (double amp : {0.02, 0.05, 0.1, 0.2}) {
    Rng noise(7);
    Gray noisy = base;
    for (auto& v : noisy.v) v = std::min(1.0, std::max(0.0, v + amp * noise.uniform(-1.0, 1.0)));
    const double p = psnr(base, noisy);
    CHECK(p < prev);
    prev = p;
  }

  Gray small(8, 9);
  CHECK_THROWS_AS(psnr(a, small), ShapeError);
}

TEST_CASE("ssim: identity, constant-vs-constant closed form, symmetry") {
  Rng rng(2);
  auto a = textured_gray(rng, 32, 32);
  CHECK(ssim(a, a) == Approx(1.0).margin(1e-12));

  auto zero = constant_gray(16, 16, 0.0);
  auto one = constant_gray(16, 16, 1.0);
  CHECK(ssim(zero, one) == Approx(1e-4 / (1.0 + 1e-4)).margin(1e-9));
  CHECK(ssim(zero, one) == Approx(9.999e-5).margin(1e-8));

  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_gray(rng, 20, 24);
    auto y = random_gray(rng, 20, 24);
    CHECK(std::abs(ssim(x, y) - ssim(y, x)) < 1e-12);
  }

  CHECK_THROWS_AS(ssim(constant_gray(10, 10, 0.5), constant_gray(10, 10, 0.5)), ShapeError);
}

TEST_CASE("uqi: identity, anti-correlated pair, bounds") {
  Rng rng(3);
  auto a = textured_gray(rng, 24, 24);
  CHECK(uqi(a, a) == Approx(1.0).margin(1e-12));

  // two-pixel window from the definition: population covariance -0.25
  CHECK(uqi_window(0.5, 0.5, 0.25, 0.25, -0.25) == Approx(-1.0));

  Gray checker(16, 16), inverse(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      checker.at(y, x) = (x + y) % 2 ? 1.0 : 0.0;
      inverse.at(y, x) = 1.0 - checker.at(y, x);
    }
  CHECK(uqi(checker, inverse) == Approx(-1.0).margin(1e-12));

  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_gray(rng, 16, 20);
    auto y = random_gray(rng, 16, 20);
    const double q = uqi(x, y);
    CHECK(q <= 1.0 + 1e-12);
    CHECK(q >= -1.0 - 1e-12);
  }

  CHECK_THROWS_AS(uqi(constant_gray(6, 6, 0.1), constant_gray(6, 6, 0.1)), ShapeError);
}

TEST_CASE("vif: identity, destroyed signal, monotone under blur") {
  Rng rng(4);
  auto a = textured_gray(rng, 64, 64);
  CHECK(vif(a, a) == Approx(1.0).margin(1e-6));

  auto zeros = constant_gray(64, 64, 0.0);
  CHECK(vif(a, zeros) < 0.05);

  double prev = 1.0 + 1e-9;
  for (int blur_radius : {1, 2, 4}) {
    Gray blurred(a.h, a.w);
    for (int y = 0; y < a.h; ++y)
      for (int x = 0; x < a.w; ++x) {
        double acc = 0;
        int cnt = 0;
        for (int dy = -blur_radius; dy <= blur_radius; ++dy)
          for (int dx = -blur_radius; dx <= blur_radius; ++dx) {
            const int yy = std::min(a.h - 1, std::max(0, y + dy));
            const int xx = std::min(a.w - 1, std::max(0, x + dx));
            acc += a.at(yy, xx);
            ++cnt;
          }
        blurred.at(y, x) = acc / cnt;
      }
    const double v = vif(a, blurred);
    CHECK(v < prev);
    prev = v;
  }

  CHECK_THROWS_AS(vif(constant_gray(16, 16, 0.3), constant_gray(16, 16, 0.3)), ShapeError);
}

TEST_CASE("joint horizontal flip leaves every metric unchanged") {
  Rng rng(5);
  auto a = textured_gray(rng, 64, 64);
  auto b = textured_gray(rng, 64, 64);
  auto fa = flip_h(a), fb = flip_h(b);
  CHECK(psnr(a, b) == Approx(psnr(fa, fb)).margin(1e-12));
  CHECK(ssim(a, b) == Approx(ssim(fa, fb)).margin(1e-12));
  CHECK(uqi(a, b) == Approx(uqi(fa, fb)).margin(1e-12));
  CHECK(vif(a, b) == Approx(vif(fa, fb)).margin(1e-10));
}

TEST_CASE("production metrics agree with naive direct-formula references") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = trial % 2 ? random_gray(rng, 32, 32) : textured_gray(rng, 32, 32);
    auto b = trial % 3 ? random_gray(rng, 32, 32) : textured_gray(rng, 32, 32);
    CHECK(std::abs(psnr(a, b) - pftest::naive_psnr(a, b)) < 1e-9);
    CHECK(std::abs(ssim(a, b) - pftest::naive_ssim(a, b)) < 1e-9);
    CHECK(std::abs(uqi(a, b) - pftest::naive_uqi(a, b)) < 1e-9);
    CHECK(std::abs(vif(a, b) - pftest::naive_vif(a, b)) < 1e-9);
  }
}

TEST_CASE("dataset mean row is the arithmetic mean of per-image rows") {
  std::vector<MetricRow> rows = {{"a", 10, 0.5, 0.2, 0.1}, {"b", 20, 0.7, 0.4, 0.3},
                                 {"c", 30, 0.9, 0.9, 0.8}};
  const MetricRow m = mean_row(rows);
  CHECK(m.id == "mean");
  CHECK(m.psnr_db == Approx(20.0));
  CHECK(m.ssim_v == Approx(0.7));
  CHECK(m.uqi_v == Approx(0.5));
  CHECK(m.vif_v == Approx(0.4));
}

TEST_CASE("luma conversion drives color metrics") {
  data::ImageTensor t(Shape{3, 16, 16});
  const std::int64_t plane = 16 * 16;
  for (std::int64_t i = 0; i < plane; ++i) {
    t.values()[i] = 1.0f;            // R = 1 in [0,1]
    t.values()[plane + i] = -1.0f;   // G = 0
    t.values()[2 * plane + i] = -1.0f;
  }
  const Gray g = to_gray(t);
  CHECK(g.at(0, 0) == Approx(0.299));
}
