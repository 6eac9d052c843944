#include "warpnet/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "warpnet/errors.hpp"

namespace warpnet {

// ---- kernels ---------------------------------------------------------------

RealArray conv1d_forward(const RealArray& x, const RealArray& kernel,
                         const RealArray& bias) {
  if (x.shape.size() != 2 || kernel.shape.size() != 3)
    throw ShapeError("conv1d_forward: expected x T x Cin, kernel K x Cin x Cout");
  const std::size_t t = x.shape[0], c_in = x.shape[1];
  const std::size_t k = kernel.shape[0], c_out = kernel.shape[2];
  if (kernel.shape[1] != c_in || bias.size() != c_out)
    throw ShapeError("conv1d_forward: channel mismatch");
  const long pad = static_cast<long>((k - 1) / 2);
  RealArray y({t, c_out});
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t co = 0; co < c_out; ++co) y.at(i, co) = bias[co];
    for (std::size_t kk = 0; kk < k; ++kk) {
      const long src = static_cast<long>(i) + static_cast<long>(kk) - pad;
      if (src < 0 || src >= static_cast<long>(t)) continue;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const double xv = x.at(static_cast<std::size_t>(src), ci);
        if (xv == 0.0) continue;
        for (std::size_t co = 0; co < c_out; ++co)
          y.at(i, co) += xv * kernel.at(kk, ci, co);
      }
    }
  }
  return y;
}

Conv1dGrads conv1d_backward(const RealArray& x, const RealArray& kernel,
                            const RealArray& d_out) {
  const std::size_t t = x.shape[0], c_in = x.shape[1];
  const std::size_t k = kernel.shape[0], c_out = kernel.shape[2];
  d_out.require_shape({t, c_out}, "conv1d_backward");
  const long pad = static_cast<long>((k - 1) / 2);
  Conv1dGrads g{RealArray({t, c_in}), RealArray({k, c_in, c_out}),
                RealArray({c_out})};
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t co = 0; co < c_out; ++co) g.d_bias[co] += d_out.at(i, co);
    for (std::size_t kk = 0; kk < k; ++kk) {
      const long src = static_cast<long>(i) + static_cast<long>(kk) - pad;
      if (src < 0 || src >= static_cast<long>(t)) continue;
      const std::size_t s = static_cast<std::size_t>(src);
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const double xv = x.at(s, ci);
        double dx = 0.0;
        for (std::size_t co = 0; co < c_out; ++co) {
          const double dy = d_out.at(i, co);
          g.d_kernel.at(kk, ci, co) += xv * dy;
          dx += kernel.at(kk, ci, co) * dy;
        }
        g.d_input.at(s, ci) += dx;
      }
    }
  }
  return g;
}

RealArray dense_forward(const RealArray& x, const RealArray& w,
                        const RealArray& b) {
  const std::size_t in = w.shape[0], out = w.shape[1];
  if (x.size() != in || b.size() != out)
    throw ShapeError("dense_forward: shape mismatch");
  RealArray y({out});
  for (std::size_t j = 0; j < out; ++j) y[j] = b[j];
  for (std::size_t i = 0; i < in; ++i) {
    const double xv = x[i];
    if (xv == 0.0) continue;
    for (std::size_t j = 0; j < out; ++j) y[j] += xv * w.at(i, j);
  }
  return y;
}

DenseGrads dense_backward(const RealArray& x, const RealArray& w,
                          const RealArray& d_out) {
  const std::size_t in = w.shape[0], out = w.shape[1];
  if (x.size() != in || d_out.size() != out)
    throw ShapeError("dense_backward: shape mismatch");
  DenseGrads g{RealArray({in}), RealArray({in, out}), RealArray({out})};
  for (std::size_t j = 0; j < out; ++j) g.d_bias[j] = d_out[j];
  for (std::size_t i = 0; i < in; ++i) {
    double dx = 0.0;
    const double xv = x[i];
    for (std::size_t j = 0; j < out; ++j) {
      const double dy = d_out[j];
      g.d_weights.at(i, j) = xv * dy;
      dx += w.at(i, j) * dy;
    }
    g.d_input[i] = dx;
  }
  return g;
}

RealArray tanh_forward(const RealArray& x) {
  RealArray y = x;
  for (double& v : y.data) v = std::tanh(v);
  return y;
}

RealArray tanh_backward(const RealArray& y, const RealArray& d_out) {
  RealArray dx = d_out;
  for (std::size_t i = 0; i < dx.size(); ++i)
    dx.data[i] *= 1.0 - y.data[i] * y.data[i];
  return dx;
}

RealArray relu_forward(const RealArray& x) {
  RealArray y = x;
  for (double& v : y.data) v = std::max(0.0, v);
  return y;
}

RealArray relu_backward(const RealArray& x, const RealArray& d_out) {
  RealArray dx = d_out;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (x.data[i] <= 0.0) dx.data[i] = 0.0;
  return dx;
}

RealArray softmax(const RealArray& logits) {
  RealArray p = logits;
  double mx = *std::max_element(p.data.begin(), p.data.end());
  double sum = 0.0;
  for (double& v : p.data) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p.data) v /= sum;
  return p;
}

std::pair<double, RealArray> softmax_cross_entropy(const RealArray& logits,
                                                   int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw DomainError("softmax_cross_entropy: label out of range");
  double mx = *std::max_element(logits.data.begin(), logits.data.end());
  double sum = 0.0;
  for (double v : logits.data) sum += std::exp(v - mx);
  const double log_z = mx + std::log(sum);
  const double loss = log_z - logits[static_cast<std::size_t>(label)];
  RealArray d = softmax(logits);
  d[static_cast<std::size_t>(label)] -= 1.0;
  return {loss, std::move(d)};
}

// ---- layers ----------------------------------------------------------------

namespace {

void xavier_init(RealArray& w, std::size_t fan_in, std::size_t fan_out,
                 Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data) v = rng.uniform(-bound, bound);
}

class Conv1dLayer final : public Layer {
 public:
  Conv1dLayer(std::size_t k, std::size_t c_in, std::size_t c_out)
      : k_(k), c_in_(c_in), c_out_(c_out) {
    p_.weights = RealArray({k, c_in, c_out});
    p_.bias = RealArray({c_out});
    p_.d_weights = RealArray({k, c_in, c_out});
    p_.d_bias = RealArray({c_out});
  }
  RealArray forward(const RealArray& x) override {
    x_ = x;
    return conv1d_forward(x, p_.weights, p_.bias);
  }
  RealArray backward(const RealArray& d_out) override {
    Conv1dGrads g = conv1d_backward(x_, p_.weights, d_out);
    for (std::size_t i = 0; i < g.d_kernel.size(); ++i)
      p_.d_weights.data[i] += g.d_kernel.data[i];
    for (std::size_t i = 0; i < g.d_bias.size(); ++i)
      p_.d_bias.data[i] += g.d_bias.data[i];
    return std::move(g.d_input);
  }
  LayerParams* params() override { return &p_; }
  void init(Rng& rng) override {
    xavier_init(p_.weights, k_ * c_in_, k_ * c_out_, rng);
    p_.bias.fill(0.0);
  }

 private:
  std::size_t k_, c_in_, c_out_;
  LayerParams p_;
  RealArray x_;
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(std::size_t in, std::size_t out) : in_(in), out_(out) {
    p_.weights = RealArray({in, out});
    p_.bias = RealArray({out});
    p_.d_weights = RealArray({in, out});
    p_.d_bias = RealArray({out});
  }
  RealArray forward(const RealArray& x) override {
    x_ = x;
    return dense_forward(x, p_.weights, p_.bias);
  }
  RealArray backward(const RealArray& d_out) override {
    DenseGrads g = dense_backward(x_, p_.weights, d_out);
    for (std::size_t i = 0; i < g.d_weights.size(); ++i)
      p_.d_weights.data[i] += g.d_weights.data[i];
    for (std::size_t i = 0; i < g.d_bias.size(); ++i)
      p_.d_bias.data[i] += g.d_bias.data[i];
    return std::move(g.d_input);
  }
  LayerParams* params() override { return &p_; }
  void init(Rng& rng) override {
    xavier_init(p_.weights, in_, out_, rng);
    p_.bias.fill(0.0);
  }

 private:
  std::size_t in_, out_;
  LayerParams p_;
  RealArray x_;
};

class TanhLayer final : public Layer {
 public:
  RealArray forward(const RealArray& x) override {
    y_ = tanh_forward(x);
    return y_;
  }
  RealArray backward(const RealArray& d_out) override {
    return tanh_backward(y_, d_out);
  }

 private:
  RealArray y_;
};

class ReluLayer final : public Layer {
 public:
  RealArray forward(const RealArray& x) override {
    x_ = x;
    return relu_forward(x);
  }
  RealArray backward(const RealArray& d_out) override {
    return relu_backward(x_, d_out);
  }

 private:
  RealArray x_;
};

class FlattenLayer final : public Layer {
 public:
  RealArray forward(const RealArray& x) override {
    shape_ = x.shape;
    RealArray y = x;
    y.shape = {x.size()};
    return y;
  }
  RealArray backward(const RealArray& d_out) override {
    RealArray dx = d_out;
    dx.shape = shape_;
    return dx;
  }

 private:
  std::vector<std::size_t> shape_;
};

}  // namespace

std::unique_ptr<Layer> make_conv1d(std::size_t kernel, std::size_t c_in,
                                   std::size_t c_out) {
  return std::make_unique<Conv1dLayer>(kernel, c_in, c_out);
}
std::unique_ptr<Layer> make_dense(std::size_t in, std::size_t out) {
  return std::make_unique<DenseLayer>(in, out);
}
std::unique_ptr<Layer> make_activation(Activation act) {
  if (act == Activation::Tanh) return std::make_unique<TanhLayer>();
  return std::make_unique<ReluLayer>();
}
std::unique_ptr<Layer> make_flatten() {
  return std::make_unique<FlattenLayer>();
}

RealArray Stack::forward(const RealArray& x) {
  RealArray h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

RealArray Stack::backward(const RealArray& d_out) {
  RealArray d = d_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    d = (*it)->backward(d);
  return d;
}

void Stack::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

void Stack::zero_grads() {
  for (auto& l : layers_)
    if (LayerParams* p = l->params()) {
      p->d_weights.fill(0.0);
      p->d_bias.fill(0.0);
    }
}

std::vector<LayerParams*> Stack::params() {
  std::vector<LayerParams*> out;
  for (auto& l : layers_)
    if (LayerParams* p = l->params()) out.push_back(p);
  return out;
}

// ---- optimizers ------------------------------------------------------------

Optimizer::Optimizer(OptimizerKind kind, double base_lr,
                     std::vector<ParamGroup> groups)
    : kind_(kind), base_lr_(base_lr), groups_(std::move(groups)) {
  slots_.resize(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    for (LayerParams* p : groups_[g].params) {
      Slot s;
      s.m_w = RealArray(p->weights.shape);
      s.m_b = RealArray(p->bias.shape);
      if (kind_ == OptimizerKind::Adam) {
        s.v_w = RealArray(p->weights.shape);
        s.v_b = RealArray(p->bias.shape);
      }
      slots_[g].push_back(std::move(s));
    }
  }
}

namespace {

void momentum_update(std::vector<double>& p, const std::vector<double>& g,
                     std::vector<double>& v, double lr) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i] = 0.9 * v[i] + g[i];
    p[i] -= lr * v[i];
  }
}

void adam_update(std::vector<double>& p, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v, double lr,
                 long t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

void Optimizer::step(double lr_scale) {
  ++step_count_;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const double lr = base_lr_ * lr_scale * groups_[g].lr_multiplier;
    for (std::size_t i = 0; i < groups_[g].params.size(); ++i) {
      LayerParams* p = groups_[g].params[i];
      Slot& s = slots_[g][i];
      if (kind_ == OptimizerKind::Momentum) {
        momentum_update(p->weights.data, p->d_weights.data, s.m_w.data, lr);
        momentum_update(p->bias.data, p->d_bias.data, s.m_b.data, lr);
      } else {
        adam_update(p->weights.data, p->d_weights.data, s.m_w.data, s.v_w.data,
                    lr, step_count_);
        adam_update(p->bias.data, p->d_bias.data, s.m_b.data, s.v_b.data, lr,
                    step_count_);
      }
    }
  }
}

// ---- checkpoint container --------------------------------------------------

namespace {

constexpr char kMagic[] = "WARPNET1";

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}

double read_f64(std::istream& is) {
  std::uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void save_named_arrays(
    const std::string& path,
    const std::vector<std::pair<std::string, const RealArray*>>& arrays) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("cannot open for writing: " + path);
  os.write(kMagic, 8);
  for (const auto& [name, arr] : arrays) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, arr->shape.size());
    for (std::size_t d : arr->shape) write_u64(os, d);
    for (double v : arr->data) write_f64(os, v);
  }
  if (!os) throw ParseError("write failed: " + path);
}

std::vector<std::pair<std::string, RealArray>> load_named_arrays(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("bad checkpoint magic in " + path);
  std::vector<std::pair<std::string, RealArray>> out;
  while (true) {
    std::uint64_t name_len = read_u64(is);
    if (is.eof()) break;
    if (!is) throw ParseError("truncated checkpoint: " + path);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    std::uint64_t rank = read_u64(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_u64(is);
    RealArray arr(shape);
    for (double& v : arr.data) v = read_f64(is);
    if (!is) throw ParseError("truncated checkpoint: " + path);
    out.emplace_back(std::move(name), std::move(arr));
  }
  return out;
}

}  // namespace warpnet
