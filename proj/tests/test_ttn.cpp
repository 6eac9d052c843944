#include <cmath>

#include "doctest.h"
#include "warpnet/errors.hpp"
#include "warpnet/rng.hpp"
#include "warpnet/ttn.hpp"

using namespace warpnet;

namespace {

RealArray vec(std::vector<double> v) {
  RealArray a({v.size()});
  a.data = std::move(v);
  return a;
}

}  // namespace

TEST_CASE("constraint_forward uniform tail gives the identity warp") {
  for (double c : {1.0, -2.5, 0.3}) {
    auto w = constraint_forward(vec({0, c, c, c}));
    for (int i = 0; i < 4; ++i)
      CHECK(w.values[i] == doctest::Approx(i).epsilon(1e-6));
    CHECK(validate(w).valid());
  }
}

TEST_CASE("constraint_forward concentrated mass") {
  auto w = constraint_forward(vec({0, 1, 0, 0}));
  CHECK(w.values[0] == 0.0);
  CHECK(w.values[1] == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(w.values[2] == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(w.values[3] == 3.0);
}

TEST_CASE("constraint_forward degenerate tail") {
  CHECK_THROWS_AS(constraint_forward(vec({0, 0, 0, 0})), DomainError);
  CHECK_THROWS_AS(constraint_forward(vec({5, 0, 0, 0})), DomainError);
}

TEST_CASE("constraint output is always a valid warp") {
  Rng rng(8);
  for (int trial = 0; trial < 10000; ++trial) {
    RealArray v({20});
    for (double& x : v.data) x = rng.uniform(-3.0, 3.0);
    v[0] = 0.0;
    CHECK(validate(constraint_forward(v)).valid());
  }
}

TEST_CASE("constraint is scale invariant") {
  Rng rng(9);
  RealArray v({15});
  for (double& x : v.data) x = rng.uniform(-1.0, 1.0);
  v[0] = 0.0;
  RealArray v2 = v;
  for (double& x : v2.data) x *= -7.25;
  auto w1 = constraint_forward(v);
  auto w2 = constraint_forward(v2);
  for (std::size_t i = 0; i < 15; ++i)
    CHECK(std::abs(w1.values[i] - w2.values[i]) < 1e-12);
}

TEST_CASE("constraint_backward properties") {
  Rng rng(10);
  RealArray v({12});
  for (double& x : v.data) x = rng.uniform(-1.0, 1.0);
  v[0] = 0.0;

  std::vector<double> zero(12, 0.0);
  RealArray dz = constraint_backward(v, zero);
  for (double g : dz.data) CHECK(g == 0.0);

  std::vector<double> r(12);
  for (double& x : r) x = rng.uniform(-1.0, 1.0);
  RealArray dv = constraint_backward(v, r);
  CHECK(dv[0] == 0.0);
  // Scale invariance of the forward map: derivative along v vanishes.
  double dot = 0.0;
  for (std::size_t i = 0; i < 12; ++i) dot += dv[i] * v[i];
  CHECK(std::abs(dot) < 1e-10);
}

TEST_CASE("identity-initialized TTN is a no-op") {
  const std::size_t t = 50, n = 2;
  TTNConfig cfg;
  cfg.conv_layers = {{1, 8}};
  cfg.fc_layers = {};
  cfg.output_length = t;
  TTN ttn(cfg, n);
  Rng rng(11);
  ttn.init(rng);
  Sequence x = make_sequence(t, n);
  for (double& v : x.frames.data) v = rng.uniform(-1.0, 1.0);
  TTNOutput out = ttn.forward(x);
  CHECK(out.warped.frames.data == x.frames.data);  // bitwise
  CHECK(validate(out.warp).valid());
  // Warp positions hit the grid to within the resampler's snap tolerance.
  for (std::size_t i = 0; i < t; ++i)
    CHECK(std::abs(out.warp.values[i] - static_cast<double>(i)) < 1e-9);
}

TEST_CASE("paper-shaped TTN configs produce valid warps") {
  Rng rng(12);
  // 3 FC layers, tanh, hidden 16/16, T = 50.
  {
    TTNConfig cfg;
    cfg.fc_layers = {16, 16};
    cfg.activation = Activation::Tanh;
    cfg.output_length = 50;
    TTN ttn(cfg, 3);
    ttn.init(rng);
    // random head so the warp is non-trivial
    LayerParams* last = ttn.stack().layer(ttn.stack().size() - 1).params();
    for (double& v : last->weights.data) v = rng.uniform(-0.2, 0.2);
    Sequence x = make_sequence(50, 3);
    for (double& v : x.frames.data) v = rng.uniform(-1.0, 1.0);
    TTNOutput out = ttn.forward(x);
    CHECK(out.warp.values.size() == 50);
    CHECK(validate(out.warp).valid());
  }
  // 2 conv layers (kernel 8, 16 maps) + 3 FC (16, 16, 50), relu.
  {
    TTNConfig cfg;
    cfg.conv_layers = {{16, 8}, {16, 8}};
    cfg.fc_layers = {16, 16};
    cfg.activation = Activation::Relu;
    cfg.output_length = 50;
    TTN ttn(cfg, 6);
    ttn.init(rng);
    Sequence x = make_sequence(50, 6);
    for (double& v : x.frames.data) v = rng.uniform(-1.0, 1.0);
    TTNOutput out = ttn.forward(x);
    CHECK(out.warp.values.size() == 50);
    CHECK(validate(out.warp).valid());
  }
}

TEST_CASE("TTN backward zero gradient and shape structure") {
  const std::size_t t = 20, n = 2;
  TTNConfig cfg;
  cfg.conv_layers = {{2, 3}};
  cfg.fc_layers = {8};
  cfg.output_length = t;
  TTN ttn(cfg, n);
  Rng rng(13);
  ttn.init(rng);
  LayerParams* last = ttn.stack().layer(ttn.stack().size() - 1).params();
  for (double& v : last->weights.data) v = rng.uniform(-0.3, 0.3);

  Sequence x = make_sequence(t, n);
  for (double& v : x.frames.data) v = rng.uniform(-1.0, 1.0);
  ttn.stack().zero_grads();
  ttn.forward(x);
  RealArray zero({t, n});
  RealArray dx = ttn.backward(zero);
  for (double v : dx.data) CHECK(v == 0.0);
  for (LayerParams* p : ttn.stack().params()) {
    CHECK(p->d_weights.shape == p->weights.shape);
    CHECK(p->d_bias.shape == p->bias.shape);
    for (double v : p->d_weights.data) CHECK(v == 0.0);
  }
}

TEST_CASE("joint model gradients stay finite") {
  const std::size_t t = 20, n = 1;
  TTNConfig ttn_cfg;
  ttn_cfg.conv_layers = {{1, 8}};
  ttn_cfg.output_length = t;
  ClassifierConfig cls;
  Model model(ttn_cfg, cls, t, n, 2);
  Rng rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    model.init(rng.next_u64());
    LayerParams* last =
        model.ttn().stack().layer(model.ttn().stack().size() - 1).params();
    for (double& v : last->weights.data) v = rng.uniform(-0.5, 0.5);
    Sequence x = make_sequence(t, n);
    for (double& v : x.frames.data) v = rng.uniform(-2.0, 2.0);
    model.zero_grads();
    RealArray logits = model.forward(x);
    auto [loss, d_logits] = softmax_cross_entropy(logits, trial % 2);
    CHECK(std::isfinite(loss));
    model.backward(d_logits);
    for (auto& [name, arr] : model.named_params())
      for (double v : arr->data) CHECK(std::isfinite(v));
  }
}

TEST_CASE("model checkpoint round trip") {
  const std::size_t t = 16, n = 2;
  TTNConfig ttn_cfg;
  ttn_cfg.fc_layers = {8};
  ttn_cfg.output_length = t;
  ClassifierConfig cls;
  cls.fc_layers = {4};
  Model a(ttn_cfg, cls, t, n, 3);
  a.init(77);
  const std::string path = "test_model_ckpt.bin";
  a.save_checkpoint(path);
  Model b(ttn_cfg, cls, t, n, 3);
  b.init(123);
  b.load_checkpoint(path);
  Sequence x = make_sequence(t, n);
  Rng rng(15);
  for (double& v : x.frames.data) v = rng.uniform(-1.0, 1.0);
  CHECK(a.forward(x).data == b.forward(x).data);
  std::remove(path.c_str());
}
