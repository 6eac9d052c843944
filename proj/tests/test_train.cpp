#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "warpnet/train.hpp"

using namespace warpnet;

namespace {

GenSpec tiny_spec(std::uint64_t seed) {
  GenSpec s;
  s.kind = DatasetKind::Gauss2;
  s.t = 40;
  s.train_count = 60;
  s.test_count = 20;
  s.warped = false;
  s.seed = seed;
  return s;
}

ClassifierConfig tiny_classifier() {
  ClassifierConfig c;
  c.conv_layers = {{4, 5}};
  c.fc_layers = {16};
  return c;
}

TrainConfig tiny_train(long iters) {
  TrainConfig t;
  t.iterations = iters;
  t.batch_size = 8;
  t.base_lr = 1e-3;
  t.eval_every = iters;
  t.seed = 3;
  return t;
}

}  // namespace

TEST_CASE("first training loss is ln(num_classes)") {
  auto [train_ds, test_ds] = generate(tiny_spec(1));
  Model m(std::nullopt, tiny_classifier(), 40, 1, 2);
  m.init(9);
  TrainConfig cfg = tiny_train(1);
  RunHistory h = train(m, train_ds, test_ds, cfg);
  REQUIRE_FALSE(h.points.empty());
  CHECK(h.points.front().train_loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("training is deterministic for a fixed seed and learns") {
  auto [train_ds, test_ds] = generate(tiny_spec(2));
  TrainConfig cfg = tiny_train(300);

  Model a(std::nullopt, tiny_classifier(), 40, 1, 2);
  a.init(4);
  RunHistory ha = train(a, train_ds, test_ds, cfg);

  Model b(std::nullopt, tiny_classifier(), 40, 1, 2);
  b.init(4);
  RunHistory hb = train(b, train_ds, test_ds, cfg);

  REQUIRE(ha.points.size() == hb.points.size());
  for (std::size_t i = 0; i < ha.points.size(); ++i) {
    CHECK(ha.points[i].train_loss == hb.points[i].train_loss);
    CHECK(ha.points[i].test_accuracy == hb.points[i].test_accuracy);
  }
  CHECK(predict(a, test_ds) == predict(b, test_ds));
  CHECK(ha.final_accuracy > 0.9);  // easy unwarped task
}

TEST_CASE("frozen identity TTN matches the plain classifier bit for bit") {
  auto [train_ds, test_ds] = generate(tiny_spec(5));
  TrainConfig cfg = tiny_train(150);
  cfg.ttn_lr_ratio = 0.0;  // TTN parameters excluded from the optimizer

  Model plain(std::nullopt, tiny_classifier(), 40, 1, 2);
  plain.init(7);

  TTNConfig ttn_cfg;
  ttn_cfg.fc_layers = {8};
  ttn_cfg.output_length = 40;
  Model with_ttn(ttn_cfg, tiny_classifier(), 40, 1, 2);
  with_ttn.init(7);

  RunHistory hp = train(plain, train_ds, test_ds, cfg);
  RunHistory ht = train(with_ttn, train_ds, test_ds, cfg);

  REQUIRE(hp.points.size() == ht.points.size());
  for (std::size_t i = 0; i < hp.points.size(); ++i)
    CHECK(hp.points[i].train_loss == ht.points[i].train_loss);
  CHECK(predict(plain, test_ds) == predict(with_ttn, test_ds));
  for (const auto& s : test_ds.sequences) {
    RealArray lp = plain.forward(const_cast<Sequence&>(s));
    RealArray lt = with_ttn.forward(const_cast<Sequence&>(s));
    CHECK(lp.data == lt.data);
  }
}

TEST_CASE("lr schedule changes the trajectory") {
  auto [train_ds, test_ds] = generate(tiny_spec(6));
  TrainConfig cfg = tiny_train(100);
  Model a(std::nullopt, tiny_classifier(), 40, 1, 2);
  a.init(2);
  RunHistory ha = train(a, train_ds, test_ds, cfg);

  TrainConfig sched = cfg;
  sched.lr_schedule = {{10, 0.0}};  // lr drops to zero after iteration 10
  Model b(std::nullopt, tiny_classifier(), 40, 1, 2);
  b.init(2);
  RunHistory hb = train(b, train_ds, test_ds, sched);
  CHECK(ha.points.back().train_loss != hb.points.back().train_loss);
}

TEST_CASE("extract_features returns penultimate activations") {
  auto [train_ds, test_ds] = generate(tiny_spec(8));
  Model m(std::nullopt, tiny_classifier(), 40, 1, 2);
  m.init(1);
  auto feats = extract_features(m, test_ds);
  REQUIRE(feats.size() == test_ds.size());
  CHECK(feats[0].size() == 16);  // last hidden size
  // consistency with the cached penultimate from forward
  m.forward(test_ds.sequences[0]);
  CHECK(m.penultimate().data == feats[0]);
}

TEST_CASE("clustering metrics on separable data") {
  // Two tight, far-apart clusters labeled consistently: perfect scores.
  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    feats.push_back({0.0 + 0.01 * i, 0.0});
    labels.push_back(0);
    feats.push_back({100.0 + 0.01 * i, 0.0});
    labels.push_back(1);
  }
  ClusteringScores s = clustering_metrics(feats, labels, 2, 5, 1);
  CHECK(s.purity == doctest::Approx(1.0));
  CHECK(s.homogeneity == doctest::Approx(1.0));
  CHECK(s.completeness == doctest::Approx(1.0));

  // k = 1: everything in one cluster.
  ClusteringScores one = clustering_metrics(feats, labels, 1, 3, 1);
  CHECK(one.purity == doctest::Approx(0.5));
  CHECK(one.homogeneity == doctest::Approx(0.0));
  CHECK(one.completeness == doctest::Approx(1.0));
}

TEST_CASE("clustering metrics on a mixed cluster") {
  // Cluster A holds 3 of label 0 + 1 of label 1, cluster B holds 4 of label 1.
  std::vector<std::vector<double>> feats = {
      {0.0}, {0.1}, {0.2}, {0.3}, {50.0}, {50.1}, {50.2}, {50.3}};
  std::vector<int> labels = {0, 0, 0, 1, 1, 1, 1, 1};
  ClusteringScores s = clustering_metrics(feats, labels, 2, 5, 2);
  CHECK(s.purity == doctest::Approx(7.0 / 8.0));
  CHECK(s.homogeneity > 0.0);
  CHECK(s.homogeneity < 1.0);
  CHECK(s.completeness > 0.0);
  CHECK(s.completeness < 1.0);
}

TEST_CASE("sequence_distance is a Frobenius distance") {
  Sequence a = make_sequence(2, 2);
  Sequence b = make_sequence(2, 2);
  b.frames.at(0, 0) = 3.0;
  b.frames.at(1, 1) = 4.0;
  CHECK(sequence_distance(a, b) == doctest::Approx(5.0));
  CHECK(sequence_distance(a, a) == 0.0);
  Sequence c = make_sequence(3, 2);
  CHECK_THROWS_AS(sequence_distance(a, c), ShapeError);
}

TEST_CASE("identity TTN warp report leaves distances unchanged") {
  auto [train_ds, test_ds] = generate(tiny_spec(10));
  TTNConfig ttn_cfg;
  ttn_cfg.fc_layers = {8};
  ttn_cfg.output_length = 40;
  Model m(ttn_cfg, tiny_classifier(), 40, 1, 2);
  m.init(3);  // identity TTN out of the box
  WarpReport r = discriminative_warp_report(m, test_ds, 20, 4);
  CHECK(r.intra_pairs > 0);
  CHECK(r.inter_pairs > 0);
  CHECK(r.mean_intra_post == doctest::Approx(r.mean_intra_pre));
  CHECK(r.mean_inter_post == doctest::Approx(r.mean_inter_pre));
}

TEST_CASE("mean-warp postprocess undoes a shared warp on average") {
  // All outputs share one warp; re-warping by the inverse of the mean warp
  // must recover (approximately) the unwarped content.
  Rng rng(19);
  WarpFunction shared = random_warp(30, 0.5, rng);
  std::vector<TTNOutput> outs;
  Sequence base = make_sequence(30, 1);
  for (std::size_t i = 0; i < 30; ++i)
    base.frames.at(i, 0) = std::sin(0.4 * static_cast<double>(i));
  for (int s = 0; s < 3; ++s) {
    TTNOutput o;
    o.warp = shared;
    o.warped = warp_sequence(base, shared);
    outs.push_back(o);
  }
  auto fixed = mean_warp_postprocess(outs);
  REQUIRE(fixed.size() == 3);
  double err_fixed = 0.0, err_raw = 0.0;
  for (std::size_t i = 0; i < 30; ++i) {
    err_fixed += std::abs(fixed[0].frames.at(i, 0) - base.frames.at(i, 0));
    err_raw += std::abs(outs[0].warped.frames.at(i, 0) - base.frames.at(i, 0));
  }
  CHECK(err_fixed < err_raw);
}

TEST_CASE("history CSV is written with one row per eval point") {
  RunHistory h;
  h.points = {{0, 0.7, 0.5}, {100, 0.3, 0.9}};
  const std::string path = "test_history.csv";
  save_history_csv(h, path);
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "iteration,train_loss,test_accuracy");
  int rows = 0;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
  f.close();
  std::remove(path.c_str());
}
