#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "warpnet/data.hpp"
#include "warpnet/ttn.hpp"

namespace warpnet {

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double base_lr = 1e-4;
  double ttn_lr_ratio = 0.1;
  long iterations = 1000;
  std::size_t batch_size = 32;
  // (iteration, multiplier) applied from that iteration on.
  std::vector<std::pair<long, double>> lr_schedule;
  long eval_every = 100;
  std::uint64_t seed = 0;
};

struct HistoryPoint {
  long iteration;
  double train_loss;
  double test_accuracy;
};

struct RunHistory {
  std::vector<HistoryPoint> points;
  double final_accuracy = 0.0;
};

RunHistory train(Model& model, const Dataset& train_ds, const Dataset& test_ds,
                 const TrainConfig& cfg);

double evaluate_accuracy(Model& model, const Dataset& ds);
std::vector<int> predict(Model& model, const Dataset& ds);

// Penultimate-layer classifier features for every sample.
std::vector<std::vector<double>> extract_features(Model& model,
                                                  const Dataset& ds);

struct ClusteringScores {
  double purity = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
};

// K-means (seeded random-partition init, 100-iteration cap) averaged over
// `runs` restarts.
ClusteringScores clustering_metrics(
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& labels, std::size_t k, std::size_t runs,
    std::uint64_t seed = 0);

double sequence_distance(const Sequence& a, const Sequence& b);

struct WarpReport {
  std::size_t intra_pairs = 0;
  std::size_t inter_pairs = 0;
  double mean_intra_pre = 0.0;
  double mean_intra_post = 0.0;
  double mean_inter_pre = 0.0;
  double mean_inter_post = 0.0;
  // fractions of pairs satisfying the discriminative-warp inequalities
  double frac_intra_closer = 0.0;  // post < pre within a class
  double frac_inter_farther = 0.0; // post > pre across classes
};

WarpReport discriminative_warp_report(Model& model, const Dataset& ds,
                                      std::size_t pairs_per_class,
                                      std::uint64_t seed = 0);

// gamma_mu^{-1} re-warping of TTN outputs, for figure-style visualization.
std::vector<Sequence> mean_warp_postprocess(const std::vector<TTNOutput>& outs);

void save_history_csv(const RunHistory& history, const std::string& path);

}  // namespace warpnet
