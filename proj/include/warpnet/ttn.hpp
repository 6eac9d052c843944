#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "warpnet/nn.hpp"
#include "warpnet/resample.hpp"
#include "warpnet/warp.hpp"

namespace warpnet {

// Maps an unconstrained vector v (v[0] hard-masked to zero) to a valid warp:
// u = v/||v||, increments = (u*u + eps guard on the tail), cumulative sum
// scaled by (T-1).
WarpFunction constraint_forward(const RealArray& v);
RealArray constraint_backward(const RealArray& v,
                              const std::vector<double>& d_gamma);

struct TTNConfig {
  // (feature maps, kernel size) per conv layer.
  std::vector<std::pair<std::size_t, std::size_t>> conv_layers;
  std::vector<std::size_t> fc_layers;  // hidden sizes; final T layer implicit
  Activation activation = Activation::Tanh;
  std::size_t output_length = 0;  // T
};

struct TTNOutput {
  Sequence warped;
  WarpFunction warp;
  RealArray raw_v;
};

// Trainable warp predictor: conv/fc stack -> v -> constraint -> resample.
class TTN {
 public:
  TTN(const TTNConfig& cfg, std::size_t input_channels);

  // Final layer gets zero weights and a constant-positive bias tail so the
  // untrained module is an identity no-op.
  void init(Rng& rng);

  TTNOutput forward(const Sequence& x);
  // Returns dX (direct interpolation path plus the path through the
  // trainable stack); parameter gradients accumulate inside the stack.
  RealArray backward(const RealArray& d_warped);

  Stack& stack() { return stack_; }
  const TTNConfig& config() const { return cfg_; }

 private:
  TTNConfig cfg_;
  std::size_t input_channels_;
  Stack stack_;
  // forward cache
  Sequence x_;
  RealArray v_;
  WarpFunction warp_;
};

struct ClassifierConfig {
  std::vector<std::pair<std::size_t, std::size_t>> conv_layers;
  std::vector<std::size_t> fc_layers;  // hidden sizes; num_classes implicit
  Activation activation = Activation::Relu;
};

// TTN (optional) + classifier, trained jointly.
class Model {
 public:
  Model(std::optional<TTNConfig> ttn_cfg, ClassifierConfig cls_cfg,
        std::size_t t, std::size_t n, std::size_t num_classes);

  // Classifier and TTN draw from independent derived streams, so a model
  // with and without a TTN share classifier initialization for a given seed.
  void init(std::uint64_t seed);

  RealArray forward(const Sequence& x);  // logits
  // Penultimate activations of the classifier (input to its final dense).
  RealArray penultimate() const { return penultimate_; }
  std::optional<TTNOutput> last_ttn_output() const { return last_ttn_out_; }

  void backward(const RealArray& d_logits);
  void zero_grads();

  bool has_ttn() const { return ttn_.has_value(); }
  TTN& ttn() { return *ttn_; }
  Stack& classifier() { return classifier_; }

  std::size_t input_length() const { return t_; }
  std::size_t input_channels() const { return n_; }
  std::size_t num_classes() const { return num_classes_; }

  std::vector<std::pair<std::string, RealArray*>> named_params();
  void save_checkpoint(const std::string& path);
  void load_checkpoint(const std::string& path);

 private:
  std::optional<TTN> ttn_;
  Stack classifier_;
  std::size_t t_, n_, num_classes_;
  Sequence input_;
  RealArray penultimate_;
  std::optional<TTNOutput> last_ttn_out_;
};

}  // namespace warpnet
