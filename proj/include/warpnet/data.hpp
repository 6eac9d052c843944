#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "warpnet/resample.hpp"

namespace warpnet {

enum class DatasetKind { Gauss2, NwaveVsGauss, MixtureVsGauss, Custom };

struct GenSpec {
  DatasetKind kind = DatasetKind::Gauss2;
  std::size_t t = 100;
  std::size_t train_count = 8000;
  std::size_t test_count = 2000;
  double noise_sigma = 0.2;
  double warp_roughness = 0.5;
  bool warped = true;  // random-warp switch for the warp-robustness datasets
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<Sequence> sequences;
  std::vector<int> labels;
  std::size_t num_classes = 2;
  // generation metadata
  std::string generator;
  std::uint64_t seed = 0;
  std::string params_json;

  std::size_t size() const { return sequences.size(); }
  std::size_t length() const {
    return sequences.empty() ? 0 : sequences.front().length();
  }
  std::size_t channels() const {
    return sequences.empty() ? 0 : sequences.front().channels();
  }
};

std::pair<Dataset, Dataset> gen_dataset1(const GenSpec& spec);
std::pair<Dataset, Dataset> gen_dataset2(const GenSpec& spec);
std::pair<Dataset, Dataset> gen_dataset_supp(const GenSpec& spec);
std::pair<Dataset, Dataset> generate(const GenSpec& spec);

// Clean class templates (no warp, no noise), exposed for inspection.
std::vector<double> dataset1_template(int label, std::size_t t,
                                      double amplitude);
std::vector<double> dataset2_template(int label, std::size_t t);
std::vector<double> dataset_supp_template(int label, std::size_t t);

// Embeds length-50 sequences into length 100 (payload at 25..74, zeros
// elsewhere), then applies a random affine warp per sample.
Dataset apply_affine_distortion(const Dataset& ds,
                                std::pair<double, double> a_range,
                                std::pair<int, int> b_range,
                                std::uint64_t seed);

Sequence resample_to_length(const Sequence& x, std::size_t target_t);
Sequence zero_pad(const Sequence& x, std::size_t target_t);

// Dataset CSV: header `label,t0c0,...`, one row per sequence; JSON metadata
// sidecar alongside (same path with .json appended to the stem).
void save_dataset(const Dataset& ds, const std::string& csv_path,
                  const std::string& meta_path);
Dataset load_dataset(const std::string& csv_path);

// Skeleton CSV: rows `seq_id,frame,j0x,j0y,j0z,...` plus a labels file
// `seq_id,label`. The root joint of frame 0 is translated to the origin.
Dataset load_skeleton_csv(const std::string& skeleton_path,
                          const std::string& labels_path,
                          std::size_t joints, std::size_t root_joint = 0);

}  // namespace warpnet
