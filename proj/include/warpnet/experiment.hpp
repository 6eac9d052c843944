#pragma once

#include <optional>
#include <string>

#include "warpnet/data.hpp"
#include "warpnet/train.hpp"

namespace warpnet {

struct AffineDistortionSpec {
  double a_min = 0.75;
  double a_max = 1.25;
  int b_min = 0;
  int b_max = 49;
  std::uint64_t seed = 0;
};

// Full experiment manifest: dataset (generated or loaded), model, training.
struct ExperimentConfig {
  GenSpec dataset;
  std::optional<std::string> train_path;  // load instead of generate
  std::optional<std::string> test_path;
  std::optional<AffineDistortionSpec> affine_distortion;
  std::optional<TTNConfig> ttn;  // nullopt = baseline without TTN
  ClassifierConfig classifier;
  TrainConfig train;
  std::string out_dir = ".";
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

GenSpec parse_gen_spec(const std::string& json_text);
DatasetKind dataset_kind_from_string(const std::string& s);
std::string dataset_kind_to_string(DatasetKind k);

struct ExperimentResult {
  RunHistory history;
  double final_accuracy = 0.0;
};

// Generates/loads data, builds and trains the model, returns history.
// The trained model is left in `model_out` for further inspection.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                std::optional<Model>& model_out,
                                Dataset* train_out = nullptr,
                                Dataset* test_out = nullptr);

// Builds the (untrained) model described by the config for T x N inputs.
Model build_model(const ExperimentConfig& cfg, std::size_t t, std::size_t n,
                  std::size_t num_classes);

// Loads or generates the experiment's datasets.
std::pair<Dataset, Dataset> prepare_datasets(const ExperimentConfig& cfg);

}  // namespace warpnet
