#include "warpnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "warpnet/errors.hpp"
#include "warpnet/rng.hpp"

namespace warpnet {

RunHistory train(Model& model, const Dataset& train_ds, const Dataset& test_ds,
                 const TrainConfig& cfg) {
  if (train_ds.size() == 0 || train_ds.length() != model.input_length() ||
      train_ds.channels() != model.input_channels())
    throw ConfigError("train: dataset shape does not match model input");
  if (cfg.base_lr <= 0.0 || cfg.iterations <= 0 || cfg.batch_size == 0)
    throw ConfigError("train: invalid TrainConfig");

  std::vector<ParamGroup> groups;
  ParamGroup cls_group;
  cls_group.params = model.classifier().params();
  cls_group.lr_multiplier = 1.0;
  groups.push_back(std::move(cls_group));
  if (model.has_ttn() && cfg.ttn_lr_ratio > 0.0) {
    ParamGroup ttn_group;
    ttn_group.params = model.ttn().stack().params();
    ttn_group.lr_multiplier = cfg.ttn_lr_ratio;
    groups.push_back(std::move(ttn_group));
  }
  Optimizer opt(cfg.optimizer, cfg.base_lr, std::move(groups));

  Rng batch_rng(Rng::seed_mix(cfg.seed, 0x6261746368));
  RunHistory history;
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

  for (long it = 0; it < cfg.iterations; ++it) {
    model.zero_grads();
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const std::size_t idx =
          static_cast<std::size_t>(batch_rng.uniform_index(train_ds.size()));
      RealArray logits = model.forward(train_ds.sequences[idx]);
      auto [loss, d_logits] =
          softmax_cross_entropy(logits, train_ds.labels[idx]);
      batch_loss += loss;
      for (double& v : d_logits.data) v *= inv_batch;
      model.backward(d_logits);
    }
    batch_loss *= inv_batch;
    if (!std::isfinite(batch_loss))
      throw DivergenceError("train: non-finite loss at iteration " +
                                std::to_string(it),
                            it);
    double lr_scale = 1.0;
    for (const auto& [at, mult] : cfg.lr_schedule)
      if (it >= at) lr_scale *= mult;
    opt.step(lr_scale);

    const bool last = it + 1 == cfg.iterations;
    if ((cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0) || last) {
      const double acc = evaluate_accuracy(model, test_ds);
      history.points.push_back({it + 1, batch_loss, acc});
      if (last) history.final_accuracy = acc;
    }
  }
  return history;
}

std::vector<int> predict(Model& model, const Dataset& ds) {
  std::vector<int> out;
  out.reserve(ds.size());
  for (const Sequence& s : ds.sequences) {
    RealArray logits = model.forward(s);
    // Ties break toward the lower class index.
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
      if (logits[c] > logits[best]) best = c;
    out.push_back(static_cast<int>(best));
  }
  return out;
}

double evaluate_accuracy(Model& model, const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  std::vector<int> preds = predict(model, ds);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == ds.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

std::vector<std::vector<double>> extract_features(Model& model,
                                                  const Dataset& ds) {
  std::vector<std::vector<double>> out;
  out.reserve(ds.size());
  for (const Sequence& s : ds.sequences) {
    model.forward(s);
    out.push_back(model.penultimate().data);
  }
  return out;
}

// ---- clustering metrics ----------------------------------------------------

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

std::vector<int> kmeans_assign(const std::vector<std::vector<double>>& x,
                               std::size_t k, Rng& rng) {
  const std::size_t n = x.size();
  const std::size_t dim = x.front().size();
  // Random-partition initialization.
  std::vector<int> assign(n);
  for (std::size_t i = 0; i < n; ++i)
    assign[i] = static_cast<int>(rng.uniform_index(k));
  std::vector<std::vector<double>> centers(k, std::vector<double>(dim));
  std::vector<std::size_t> counts(k);
  for (int iter = 0; iter < 100; ++iter) {
    for (auto& c : centers) std::fill(c.begin(), c.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = centers[static_cast<std::size_t>(assign[i])];
      for (std::size_t d = 0; d < dim; ++d) c[d] += x[i][d];
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) {
        // Re-seed an empty cluster from the point farthest from its center.
        std::size_t far = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d =
              sq_dist(x[i], centers[static_cast<std::size_t>(assign[i])]);
          if (d > best) {
            best = d;
            far = i;
          }
        }
        centers[j] = x[far];
        continue;
      }
      const double inv = 1.0 / static_cast<double>(counts[j]);
      for (double& v : centers[j]) v *= inv;
    }
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best_j = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double d = sq_dist(x[i], centers[j]);
        if (d < best_d) {
          best_d = d;
          best_j = j;
        }
      }
      if (assign[i] != static_cast<int>(best_j)) {
        assign[i] = static_cast<int>(best_j);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return assign;
}

double entropy(const std::vector<std::size_t>& counts, std::size_t total) {
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

ClusteringScores clustering_metrics(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, std::size_t k, std::size_t runs,
    std::uint64_t seed) {
  const std::size_t n = features.size();
  if (n == 0 || labels.size() != n)
    throw ConfigError("clustering_metrics: features/labels mismatch");
  if (k < 1 || k > n)
    throw ConfigError("clustering_metrics: k must be in [1, n]");
  if (runs < 1) throw ConfigError("clustering_metrics: runs must be >= 1");

  const int num_classes =
      *std::max_element(labels.begin(), labels.end()) + 1;
  ClusteringScores acc;
  for (std::size_t run = 0; run < runs; ++run) {
    Rng rng(Rng::seed_mix(seed, run));
    std::vector<int> assign = kmeans_assign(features, k, rng);

    // Joint counts cluster x class.
    std::vector<std::vector<std::size_t>> joint(
        k, std::vector<std::size_t>(static_cast<std::size_t>(num_classes), 0));
    std::vector<std::size_t> cluster_counts(k, 0);
    std::vector<std::size_t> class_counts(
        static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto cl = static_cast<std::size_t>(assign[i]);
      const auto cs = static_cast<std::size_t>(labels[i]);
      ++joint[cl][cs];
      ++cluster_counts[cl];
      ++class_counts[cs];
    }

    double purity = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      purity += static_cast<double>(
          *std::max_element(joint[j].begin(), joint[j].end()));
    purity /= static_cast<double>(n);

    const double h_class = entropy(class_counts, n);
    const double h_cluster = entropy(cluster_counts, n);
    double h_class_given_cluster = 0.0;
    double h_cluster_given_class = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (cluster_counts[j] == 0) continue;
      h_class_given_cluster +=
          static_cast<double>(cluster_counts[j]) / static_cast<double>(n) *
          entropy(joint[j], cluster_counts[j]);
    }
    for (int c = 0; c < num_classes; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      if (class_counts[cs] == 0) continue;
      std::vector<std::size_t> col(k);
      for (std::size_t j = 0; j < k; ++j) col[j] = joint[j][cs];
      h_cluster_given_class +=
          static_cast<double>(class_counts[cs]) / static_cast<double>(n) *
          entropy(col, class_counts[cs]);
    }
    // 0-safe: a zero reference entropy means the conditional is also zero.
    const double homogeneity =
        h_class == 0.0 ? 1.0 : 1.0 - h_class_given_cluster / h_class;
    const double completeness =
        h_cluster == 0.0 ? 1.0 : 1.0 - h_cluster_given_class / h_cluster;

    acc.purity += purity;
    acc.homogeneity += homogeneity;
    acc.completeness += completeness;
  }
  const double inv = 1.0 / static_cast<double>(runs);
  acc.purity *= inv;
  acc.homogeneity *= inv;
  acc.completeness *= inv;
  return acc;
}

double sequence_distance(const Sequence& a, const Sequence& b) {
  if (a.frames.shape != b.frames.shape)
    throw ShapeError("sequence_distance: shape mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    const double t = a.frames.data[i] - b.frames.data[i];
    d += t * t;
  }
  return std::sqrt(d);
}

WarpReport discriminative_warp_report(Model& model, const Dataset& ds,
                                      std::size_t pairs_per_class,
                                      std::uint64_t seed) {
  if (!model.has_ttn())
    throw ConfigError("discriminative_warp_report: model has no TTN");
  // Cache the TTN outputs once.
  std::vector<Sequence> post;
  post.reserve(ds.size());
  for (const Sequence& s : ds.sequences) {
    model.forward(s);
    post.push_back(model.last_ttn_output()->warped);
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i)
    by_class[ds.labels[i]].push_back(i);

  Rng rng(Rng::seed_mix(seed, 0x7061697273));
  WarpReport report;
  std::size_t intra_closer = 0, inter_farther = 0;

  auto sample_pair = [&rng](const std::vector<std::size_t>& a,
                            const std::vector<std::size_t>& b) {
    std::size_t i, j;
    do {
      i = a[rng.uniform_index(a.size())];
      j = b[rng.uniform_index(b.size())];
    } while (i == j);
    return std::pair<std::size_t, std::size_t>{i, j};
  };

  for (const auto& [label, members] : by_class) {
    if (members.size() < 2) continue;
    for (std::size_t p = 0; p < pairs_per_class; ++p) {
      auto [i, j] = sample_pair(members, members);
      const double pre = sequence_distance(ds.sequences[i], ds.sequences[j]);
      const double after = sequence_distance(post[i], post[j]);
      report.mean_intra_pre += pre;
      report.mean_intra_post += after;
      if (after < pre) ++intra_closer;
      ++report.intra_pairs;
    }
  }
  std::vector<int> classes;
  for (const auto& [label, members] : by_class) classes.push_back(label);
  for (std::size_t a = 0; a < classes.size(); ++a)
    for (std::size_t b = a + 1; b < classes.size(); ++b)
      for (std::size_t p = 0; p < pairs_per_class; ++p) {
        auto [i, j] =
            sample_pair(by_class[classes[a]], by_class[classes[b]]);
        const double pre = sequence_distance(ds.sequences[i], ds.sequences[j]);
        const double after = sequence_distance(post[i], post[j]);
        report.mean_inter_pre += pre;
        report.mean_inter_post += after;
        if (after > pre) ++inter_farther;
        ++report.inter_pairs;
      }

  if (report.intra_pairs > 0) {
    report.mean_intra_pre /= static_cast<double>(report.intra_pairs);
    report.mean_intra_post /= static_cast<double>(report.intra_pairs);
    report.frac_intra_closer =
        static_cast<double>(intra_closer) / static_cast<double>(report.intra_pairs);
  }
  if (report.inter_pairs > 0) {
    report.mean_inter_pre /= static_cast<double>(report.inter_pairs);
    report.mean_inter_post /= static_cast<double>(report.inter_pairs);
    report.frac_inter_farther =
        static_cast<double>(inter_farther) / static_cast<double>(report.inter_pairs);
  }
  return report;
}

std::vector<Sequence> mean_warp_postprocess(
    const std::vector<TTNOutput>& outs) {
  if (outs.empty()) throw DomainError("mean_warp_postprocess: empty input");
  std::vector<WarpFunction> warps;
  warps.reserve(outs.size());
  for (const TTNOutput& o : outs) warps.push_back(o.warp);
  const WarpFunction mu_inv = invert(mean_warp(warps));
  std::vector<Sequence> result;
  result.reserve(outs.size());
  for (const TTNOutput& o : outs)
    result.push_back(warp_sequence(o.warped, mu_inv));
  return result;
}

void save_history_csv(const RunHistory& history, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open for writing: " + path);
  os << "iteration,train_loss,test_accuracy\n";
  char buf[96];
  for (const HistoryPoint& p : history.points) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g\n", p.iteration,
                  p.train_loss, p.test_accuracy);
    os << buf;
  }
}

}  // namespace warpnet
