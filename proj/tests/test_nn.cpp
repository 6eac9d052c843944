#include <cmath>

#include "doctest.h"
#include "warpnet/errors.hpp"
#include "warpnet/nn.hpp"
#include "warpnet/rng.hpp"

using namespace warpnet;

TEST_CASE("conv1d identity kernel reproduces the input") {
  RealArray x({6, 1});
  for (std::size_t i = 0; i < 6; ++i) x.at(i, 0) = static_cast<double>(i) - 2.5;
  RealArray k({3, 1, 1});
  k.at(1, 0, 0) = 1.0;  // centered delta
  RealArray b({1});
  RealArray y = conv1d_forward(x, k, b);
  for (std::size_t i = 0; i < 6; ++i) CHECK(y.at(i, 0) == x.at(i, 0));
}

TEST_CASE("conv1d all-ones kernel with zero padding") {
  RealArray x({4, 1}, 1.0);
  RealArray k({3, 1, 1}, 1.0);
  RealArray b({1});
  RealArray y = conv1d_forward(x, k, b);
  CHECK(y.at(0, 0) == doctest::Approx(2.0));
  CHECK(y.at(1, 0) == doctest::Approx(3.0));
  CHECK(y.at(2, 0) == doctest::Approx(3.0));
  CHECK(y.at(3, 0) == doctest::Approx(2.0));
}

TEST_CASE("conv1d matches a naive triple-loop oracle") {
  Rng rng(1);
  const std::size_t t = 10, ci = 2, co = 3, k = 5;
  RealArray x({t, ci}), w({k, ci, co}), b({co});
  for (double& v : x.data) v = rng.uniform(-1, 1);
  for (double& v : w.data) v = rng.uniform(-1, 1);
  for (double& v : b.data) v = rng.uniform(-1, 1);
  RealArray y = conv1d_forward(x, w, b);
  const long pad = (k - 1) / 2;
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t o = 0; o < co; ++o) {
      double acc = b[o];
      for (std::size_t kk = 0; kk < k; ++kk)
        for (std::size_t c = 0; c < ci; ++c) {
          long src = static_cast<long>(i) + static_cast<long>(kk) - pad;
          if (src < 0 || src >= static_cast<long>(t)) continue;
          acc += x.at(static_cast<std::size_t>(src), c) * w.at(kk, c, o);
        }
      CHECK(std::abs(y.at(i, o) - acc) < 1e-12);
    }
}

TEST_CASE("conv1d backward bias gradient and linearity") {
  Rng rng(2);
  RealArray x({8, 2}), w({3, 2, 2});
  for (double& v : x.data) v = rng.uniform(-1, 1);
  for (double& v : w.data) v = rng.uniform(-1, 1);
  RealArray dy({8, 2});
  for (double& v : dy.data) v = rng.uniform(-1, 1);
  auto g = conv1d_backward(x, w, dy);
  for (std::size_t o = 0; o < 2; ++o) {
    double col = 0.0;
    for (std::size_t i = 0; i < 8; ++i) col += dy.at(i, o);
    CHECK(g.d_bias[o] == doctest::Approx(col));
  }
  RealArray zero({8, 2});
  auto gz = conv1d_backward(x, w, zero);
  for (double v : gz.d_input.data) CHECK(v == 0.0);
  for (double v : gz.d_kernel.data) CHECK(v == 0.0);
}

TEST_CASE("softmax cross entropy") {
  RealArray uniform({4});
  auto [loss, grad] = softmax_cross_entropy(uniform, 2);
  CHECK(loss == doctest::Approx(std::log(4.0)));

  RealArray skew({2});
  skew[0] = 10;
  skew[1] = -10;
  auto [l2, g2] = softmax_cross_entropy(skew, 0);
  CHECK(l2 == doctest::Approx(2.061e-9).epsilon(0.01));
  CHECK(g2[0] < 0.0);
  CHECK(g2[1] > 0.0);
  CHECK(std::abs(g2[0] + g2[1]) < 1e-15);

  CHECK_THROWS_AS(softmax_cross_entropy(skew, 5), DomainError);
}

TEST_CASE("softmax is stable and normalized at extreme logits") {
  RealArray big({3});
  big[0] = 1e4;
  big[1] = -1e4;
  big[2] = 9.999e3;
  RealArray p = softmax(big);
  double sum = 0.0;
  for (double v : p.data) {
    CHECK(std::isfinite(v));
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("momentum optimizer hand iteration") {
  Stack s;
  s.add(make_dense(1, 1));
  LayerParams* p = s.params()[0];
  p->weights.fill(0.0);
  p->d_weights.fill(1.0);
  Optimizer opt(OptimizerKind::Momentum, 0.1, {{{p}, 1.0}});
  opt.step();
  CHECK(p->weights[0] == doctest::Approx(-0.1));
  opt.step();
  CHECK(p->weights[0] == doctest::Approx(-0.29));  // -0.1 - 0.19
}

TEST_CASE("zero gradient is an optimizer fixed point") {
  Stack s;
  s.add(make_dense(2, 2));
  Rng rng(3);
  s.init(rng);
  LayerParams* p = s.params()[0];
  auto before = p->weights.data;
  s.zero_grads();
  Optimizer opt(OptimizerKind::Momentum, 0.1, {{{p}, 1.0}});
  opt.step();
  CHECK(p->weights.data == before);
}

TEST_CASE("group multiplier scales the applied step") {
  Stack a, b;
  a.add(make_dense(1, 1));
  b.add(make_dense(1, 1));
  LayerParams* pa = a.params()[0];
  LayerParams* pb = b.params()[0];
  pa->weights.fill(1.0);
  pb->weights.fill(1.0);
  pa->d_weights.fill(2.0);
  pb->d_weights.fill(2.0);
  Optimizer oa(OptimizerKind::Momentum, 0.1, {{{pa}, 1.0}});
  Optimizer ob(OptimizerKind::Momentum, 0.1, {{{pb}, 0.1}});
  oa.step();
  ob.step();
  const double step_a = 1.0 - pa->weights[0];
  const double step_b = 1.0 - pb->weights[0];
  CHECK(step_a == doctest::Approx(10.0 * step_b));
}

TEST_CASE("adam takes a bounded first step") {
  Stack s;
  s.add(make_dense(1, 1));
  LayerParams* p = s.params()[0];
  p->weights.fill(0.0);
  p->d_weights.fill(100.0);
  Optimizer opt(OptimizerKind::Adam, 0.01, {{{p}, 1.0}});
  opt.step();
  // Adam's first step is ~lr regardless of gradient scale.
  CHECK(std::abs(p->weights[0] + 0.01) < 1e-6);
}

TEST_CASE("named array container round trip") {
  Rng rng(4);
  RealArray a({3, 2}), b({5});
  for (double& v : a.data) v = rng.normal();
  for (double& v : b.data) v = rng.normal();
  const std::string path = "test_checkpoint.bin";
  save_named_arrays(path, {{"layer.weight", &a}, {"layer.bias", &b}});
  auto loaded = load_named_arrays(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].first == "layer.weight");
  CHECK(loaded[0].second.shape == a.shape);
  CHECK(loaded[0].second.data == a.data);
  CHECK(loaded[1].second.data == b.data);
  std::remove(path.c_str());
}
