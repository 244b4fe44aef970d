#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "panforge/tensor_ops.hpp"
#include "support/gradcheck.hpp"
#include "support/op_gradchecks.hpp"

using namespace panforge;
using Catch::Approx;
using pftest::rand_tensor;

namespace {

template <typename Real>
Tensor<Real> make(Shape s, std::vector<Real> v) {
  return Tensor<Real>::from(std::move(s), std::move(v));
}

}  // namespace

TEST_CASE("conv2d hand-evaluated sliding window") {
  Graph<double> g;
  auto x = Tensor<double>::full(Shape{1, 1, 2, 2}, 1.0);
  auto k = Tensor<double>::full(Shape{1, 1, 3, 3}, 1.0);
  auto b = Tensor<double>::zeros(Shape{1});
  auto y = conv2d(g, x, k, b, 1, 1);
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  for (double v : y.values()) CHECK(v == Approx(4.0));
}

TEST_CASE("conv2d output shape formula") {
  Graph<double> g;
  Rng rng(3);
  auto x = rand_tensor(rng, Shape{1, 1, 4, 4});
  auto k = rand_tensor(rng, Shape{1, 1, 3, 3});
  auto b = Tensor<double>::zeros(Shape{1});
  auto y = conv2d(g, x, k, b, 2, 1);
  CHECK(y.shape() == Shape{1, 1, 2, 2});
}

TEST_CASE("conv2d identity kernel") {
  Graph<double> g;
  Rng rng(4);
  auto x = rand_tensor(rng, Shape{2, 1, 3, 5});
  auto k = Tensor<double>::full(Shape{1, 1, 1, 1}, 1.0);
  auto b = Tensor<double>::zeros(Shape{1});
  auto y = conv2d(g, x, k, b, 1, 0);
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.values().size(); ++i) CHECK(y.values()[i] == Approx(x.values()[i]));
}

TEST_CASE("conv2d rejects channel mismatch naming both shapes") {
  Graph<double> g;
  auto x = Tensor<double>::zeros(Shape{1, 3, 4, 4});
  auto k = Tensor<double>::zeros(Shape{2, 4, 3, 3});
  auto b = Tensor<double>::zeros(Shape{2});
  try {
    conv2d(g, x, k, b, 1, 1);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[1,3,4,4]") != std::string::npos);
    CHECK(msg.find("[2,4,3,3]") != std::string::npos);
  }
}

TEST_CASE("conv_transpose2d shape doubling and scalar case") {
  Graph<double> g;
  Rng rng(5);
  auto x = rand_tensor(rng, Shape{1, 1, 2, 2});
  auto k = rand_tensor(rng, Shape{1, 1, 4, 4});
  auto b = Tensor<double>::zeros(Shape{1});
  CHECK(conv_transpose2d(g, x, k, b, 2, 1).shape() == Shape{1, 1, 4, 4});

  auto xv = make<double>(Shape{1, 1, 1, 1}, {3.0});
  auto kw = make<double>(Shape{1, 1, 1, 1}, {-1.5});
  CHECK(conv_transpose2d(g, xv, kw, b, 1, 0).value() == Approx(-4.5));
}

TEST_CASE("conv_transpose2d equals backward-data of conv2d") {
  // Oracle: autodiff through conv2d. d/dxin of sum(conv2d(xin, k) * u) at
  // fixed u equals conv_transpose2d(u, k).
  Rng rng(6);
  const int stride = 2, pad = 1, ks = 4;
  auto u = rand_tensor(rng, Shape{1, 2, 4, 4});
  auto k = rand_tensor(rng, Shape{2, 3, ks, ks});
  auto bz2 = Tensor<double>::zeros(Shape{2});
  auto bz3 = Tensor<double>::zeros(Shape{3});

  auto xin = Tensor<double>::zeros(Shape{1, 3, 8, 8});
  xin.set_requires_grad(true);
  Graph<double> g;
  auto y = conv2d(g, xin, k, bz2, stride, pad);
  REQUIRE(y.shape() == u.shape());
  auto loss = pftest::weighted_sum(g, y, u);
  g.backward(loss);

  Graph<double> g2;
  auto direct = conv_transpose2d(g2, u, k, bz3, stride, pad);
  REQUIRE(direct.shape() == xin.shape());
  for (std::size_t i = 0; i < direct.values().size(); ++i)
    CHECK(std::abs(direct.values()[i] - xin.grad()[i]) < 1e-6);
}

TEST_CASE("batchnorm fixed points and affine response") {
  Graph<double> g;
  // per-channel zero-mean unit-variance input passes through
  std::vector<double> v = {1, -1, 1, -1, 1, -1, 1, -1};
  auto x = make<double>(Shape{2, 1, 2, 2}, v);
  auto gamma = Tensor<double>::full(Shape{1}, 1.0);
  auto beta = Tensor<double>::zeros(Shape{1});
  auto st = BatchNormState<double>::fresh(1);
  auto y = batch_norm(g, x, gamma, beta, st, Mode::train);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(y.values()[i] == Approx(v[i]).margin(1e-4));

  // constant input collapses to ~0 (variance 0 + eps)
  auto xc = Tensor<double>::full(Shape{1, 1, 2, 2}, 0.37);
  auto st2 = BatchNormState<double>::fresh(1);
  auto yc = batch_norm(g, xc, gamma, beta, st2, Mode::train);
  for (double val : yc.values()) CHECK(val == Approx(0.0).margin(1e-9));

  // gamma 2, beta 3 on normalized input
  auto g2t = Tensor<double>::full(Shape{1}, 2.0);
  auto b3t = Tensor<double>::full(Shape{1}, 3.0);
  auto st3 = BatchNormState<double>::fresh(1);
  auto y3 = batch_norm(g, x, g2t, b3t, st3, Mode::train);
  auto st4 = BatchNormState<double>::fresh(1);
  auto xhat = batch_norm(g, x, gamma, beta, st4, Mode::train);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(y3.values()[i] == Approx(2.0 * xhat.values()[i] + 3.0));
}

TEST_CASE("batchnorm infer without populated state is a StateError") {
  Graph<double> g;
  auto x = Tensor<double>::zeros(Shape{1, 1, 2, 2});
  auto gamma = Tensor<double>::full(Shape{1}, 1.0);
  auto beta = Tensor<double>::zeros(Shape{1});
  auto st = BatchNormState<double>::fresh(1);
  CHECK_THROWS_AS(batch_norm(g, x, gamma, beta, st, Mode::infer), StateError);
}

TEST_CASE("activation definitions") {
  Graph<double> g;
  auto x = make<double>(Shape{4}, {-1.0, 0.0, 0.0, -3.0});
  CHECK(activation(g, x, Act::lrelu, 0.2).values()[0] == Approx(-0.2));
  CHECK(activation(g, x, Act::sigmoid).values()[1] == Approx(0.5));
  CHECK(activation(g, x, Act::tanh).values()[2] == Approx(0.0));
  CHECK(activation(g, x, Act::relu).values()[3] == Approx(0.0));
}

TEST_CASE("concat_channels layout, slice roundtrip, gradient split") {
  Graph<double> g;
  Rng rng(7);
  auto a = rand_tensor(rng, Shape{1, 2, 3, 3});
  auto b = rand_tensor(rng, Shape{1, 3, 3, 3});
  auto y = concat_channels(g, a, b);
  REQUIRE(y.shape() == Shape{1, 5, 3, 3});
  for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(y.values()[i] == a.values()[i]);

  auto back = slice_channels(g, y, 0, 2);
  REQUIRE(back.shape() == a.shape());
  for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(back.values()[i] == a.values()[i]);

  a.set_requires_grad(true);
  b.set_requires_grad(true);
  Graph<double> g2;
  auto loss = reduce_sum(g2, concat_channels(g2, a, b));
  g2.backward(loss);
  for (double v : a.grad()) CHECK(v == Approx(1.0));
  for (double v : b.grad()) CHECK(v == Approx(1.0));

  auto bad = Tensor<double>::zeros(Shape{1, 3, 4, 3});
  try {
    concat_channels(g2, a, bad);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[1,2,3,3]") != std::string::npos);
    CHECK(msg.find("[1,3,4,3]") != std::string::npos);
  }
}

TEST_CASE("fully_connected examples") {
  Graph<double> g;
  auto x = make<double>(Shape{3, 2}, {1, 2, 3, 4, 5, 6});
  auto w0 = Tensor<double>::zeros(Shape{2, 1});
  auto b = Tensor<double>::full(Shape{1}, 0.7);
  auto y = fully_connected(g, x, w0, b);
  for (double v : y.values()) CHECK(v == Approx(0.7));

  auto x2 = make<double>(Shape{1, 2}, {1, 2});
  auto w = make<double>(Shape{2, 1}, {3, 4});
  auto b1 = Tensor<double>::full(Shape{1}, 1.0);
  CHECK(fully_connected(g, x2, w, b1).value() == Approx(12.0));

  auto wbad = Tensor<double>::zeros(Shape{3, 1});
  CHECK_THROWS_AS(fully_connected(g, x2, wbad, b1), ShapeError);
}

TEST_CASE("reduce_mean_abs_diff examples") {
  Graph<double> g;
  Rng rng(8);
  auto a = rand_tensor(rng, Shape{2, 3});
  CHECK(reduce_mean_abs_diff(g, a, a).value() == Approx(0.0));

  auto z = Tensor<double>::zeros(Shape{5});
  auto o = Tensor<double>::full(Shape{5}, 1.0);
  CHECK(reduce_mean_abs_diff(g, z, o).value() == Approx(1.0));

  auto p = make<double>(Shape{2}, {1, -2});
  auto q = Tensor<double>::zeros(Shape{2});
  CHECK(reduce_mean_abs_diff(g, p, q).value() == Approx(1.5));
  CHECK_THROWS_AS(reduce_mean_abs_diff(g, p, z), ShapeError);
}

TEST_CASE("backprop linear functional and sigmoid chain") {
  {
    Rng rng(9);
    auto x = rand_tensor(rng, Shape{3, 4});
    x.set_requires_grad(true);
    Graph<double> g;
    auto loss = reduce_sum(g, x);
    g.backward(loss);
    for (double v : x.grad()) CHECK(v == Approx(1.0));
  }
  {
    // loss = sigmoid(w * x) at w=0, x=1: dloss/dw = sigmoid'(0) * x = 0.25
    auto w = Tensor<double>::zeros(Shape{1});
    auto x = Tensor<double>::full(Shape{1}, 1.0);
    w.set_requires_grad(true);
    Graph<double> g;
    auto loss = activation(g, mul(g, w, x), Act::sigmoid);
    g.backward(loss);
    CHECK(w.grad()[0] == Approx(0.25));
  }
}

TEST_CASE("backprop rejects non-scalar loss") {
  Graph<double> g;
  auto x = Tensor<double>::zeros(Shape{2, 2});
  x.set_requires_grad(true);
  auto y = affine(g, x, 2.0, 0.0);
  CHECK_THROWS_AS(g.backward(y), ContractError);
}

TEST_CASE("fan-out accumulates, equivalent to duplicated-input graph") {
  Rng rng(10);
  auto x = rand_tensor(rng, Shape{6});
  auto x1 = x.deep_copy();
  auto x2 = x.deep_copy();
  x.set_requires_grad(true);
  x1.set_requires_grad(true);
  x2.set_requires_grad(true);

  Graph<double> g;
  auto loss = reduce_sum(g, add(g, activation(g, x, Act::tanh), activation(g, x, Act::sigmoid)));
  g.backward(loss);

  Graph<double> g2;
  auto loss2 = reduce_sum(g2, add(g2, activation(g2, x1, Act::tanh), activation(g2, x2, Act::sigmoid)));
  g2.backward(loss2);

  for (std::size_t i = 0; i < x.grad().size(); ++i)
    CHECK(x.grad()[i] == Approx(x1.grad()[i] + x2.grad()[i]));
}

TEST_CASE("shape algebra: stride-2 conv then 4x4 deconv restores even extents") {
  Graph<double> g;
  Rng rng(11);
  for (int hw : {8, 12, 64}) {
    auto x = rand_tensor(rng, Shape{1, 2, hw, hw});
    auto k3 = rand_tensor(rng, Shape{3, 2, 3, 3});
    auto k4 = rand_tensor(rng, Shape{3, 2, 4, 4});
    auto b3 = Tensor<double>::zeros(Shape{3});
    auto b2 = Tensor<double>::zeros(Shape{2});
    auto dk = rand_tensor(rng, Shape{3, 2, 4, 4});
    auto down3 = conv2d(g, x, k3, b3, 2, 1);
    auto down4 = conv2d(g, x, k4, b3, 2, 1);
    CHECK(down3.shape() == Shape{1, 3, hw / 2, hw / 2});
    CHECK(down4.shape() == Shape{1, 3, hw / 2, hw / 2});
    CHECK(conv_transpose2d(g, down3, dk, b2, 2, 1).shape() == Shape{1, 2, hw, hw});
    CHECK(conv_transpose2d(g, down4, dk, b2, 2, 1).shape() == Shape{1, 2, hw, hw});
  }
}

TEST_CASE("determinism: identical inputs give bit-identical outputs") {
  const auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    auto x = rand_tensor(rng, Shape{2, 3, 8, 8});
    auto k = rand_tensor(rng, Shape{4, 3, 3, 3});
    auto b = rand_tensor(rng, Shape{4});
    Graph<double> g;
    auto y = activation(g, conv2d(g, x, k, b, 2, 1), Act::lrelu);
    return y;
  };
  auto a = run(42), b = run(42);
  REQUIRE(a.values().size() == b.values().size());
  CHECK(std::memcmp(a.data(), b.data(), a.values().size() * sizeof(double)) == 0);
}

TEST_CASE("gradient spot checks per primitive") {
  const auto worst = pftest::run_gradient_suite(3, 20260809);
  for (const auto& [op, err] : worst) {
    INFO(op);
    CHECK(err <= 1e-4);
  }
}
