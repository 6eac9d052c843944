#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "warpnet/array.hpp"
#include "warpnet/rng.hpp"

namespace warpnet {

enum class Activation { Tanh, Relu };

// Parameters with matching gradient accumulators.
struct LayerParams {
  RealArray weights;
  RealArray bias;
  RealArray d_weights;
  RealArray d_bias;
};

// ---- stateless kernels -----------------------------------------------------

// 1-D cross-correlation along time, stride 1, same zero padding.
// x: T x Cin, kernel: K x Cin x Cout, bias: Cout -> T x Cout.
RealArray conv1d_forward(const RealArray& x, const RealArray& kernel,
                         const RealArray& bias);
struct Conv1dGrads {
  RealArray d_input;
  RealArray d_kernel;
  RealArray d_bias;
};
Conv1dGrads conv1d_backward(const RealArray& x, const RealArray& kernel,
                            const RealArray& d_out);

// y = W^T x + b with W: in x out.
RealArray dense_forward(const RealArray& x, const RealArray& w,
                        const RealArray& b);
struct DenseGrads {
  RealArray d_input;
  RealArray d_weights;
  RealArray d_bias;
};
DenseGrads dense_backward(const RealArray& x, const RealArray& w,
                          const RealArray& d_out);

RealArray tanh_forward(const RealArray& x);
RealArray tanh_backward(const RealArray& y, const RealArray& d_out);
RealArray relu_forward(const RealArray& x);
RealArray relu_backward(const RealArray& x, const RealArray& d_out);

// loss = -log softmax(logits)[label]; d_logits = softmax - onehot.
std::pair<double, RealArray> softmax_cross_entropy(const RealArray& logits,
                                                   int label);
RealArray softmax(const RealArray& logits);

// ---- layer stack -----------------------------------------------------------

class Layer {
 public:
  virtual ~Layer() = default;
  virtual RealArray forward(const RealArray& x) = 0;
  virtual RealArray backward(const RealArray& d_out) = 0;  // accumulates grads
  virtual LayerParams* params() { return nullptr; }
  virtual void init(Rng&) {}
};

std::unique_ptr<Layer> make_conv1d(std::size_t kernel, std::size_t c_in,
                                   std::size_t c_out);
std::unique_ptr<Layer> make_dense(std::size_t in, std::size_t out);
std::unique_ptr<Layer> make_activation(Activation act);
std::unique_ptr<Layer> make_flatten();

class Stack {
 public:
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  RealArray forward(const RealArray& x);
  RealArray backward(const RealArray& d_out);
  void init(Rng& rng);
  void zero_grads();
  std::vector<LayerParams*> params();
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// ---- optimizers ------------------------------------------------------------

enum class OptimizerKind { Momentum, Adam };

// Per-parameter-group learning-rate multiplier implements the TTN's
// one-tenth update rate.
struct ParamGroup {
  std::vector<LayerParams*> params;
  double lr_multiplier = 1.0;
};

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double base_lr, std::vector<ParamGroup> groups);
  // lr_scale multiplies base_lr (schedule drops).
  void step(double lr_scale = 1.0);
  long step_count() const { return step_count_; }

 private:
  struct Slot {
    RealArray m_w, v_w, m_b, v_b;  // momentum uses m_* only
  };
  OptimizerKind kind_;
  double base_lr_;
  std::vector<ParamGroup> groups_;
  std::vector<std::vector<Slot>> slots_;
  long step_count_ = 0;
};

// ---- checkpoint container --------------------------------------------------

// Flat binary container: magic "WARPNET1", then per parameter:
// u64 name length, name bytes, u64 rank, u64 shape dims, f64 payload (LE).
void save_named_arrays(
    const std::string& path,
    const std::vector<std::pair<std::string, const RealArray*>>& arrays);
std::vector<std::pair<std::string, RealArray>> load_named_arrays(
    const std::string& path);

}  // namespace warpnet
