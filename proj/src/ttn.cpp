#include "warpnet/ttn.hpp"

#include <cmath>
#include <map>

#include "warpnet/errors.hpp"

namespace warpnet {

namespace {
constexpr double kEps = 1e-8;
}

WarpFunction constraint_forward(const RealArray& v) {
  const std::size_t t = v.size();
  if (t < 2) throw ShapeError("constraint_forward: vector must have length >= 2");
  double norm_sq = 0.0;
  for (std::size_t i = 1; i < t; ++i) norm_sq += v[i] * v[i];
  if (norm_sq == 0.0)
    throw DomainError("constraint_forward: degenerate all-zero tail");
  const double inv_norm_sq = 1.0 / norm_sq;
  const double denom = 1.0 + static_cast<double>(t - 1) * kEps;
  WarpFunction w;
  w.values.resize(t);
  w.values[0] = 0.0;
  double cum = 0.0;
  const double scale = static_cast<double>(t - 1);
  for (std::size_t i = 1; i < t; ++i) {
    const double s = v[i] * v[i] * inv_norm_sq;
    cum += (s + kEps) / denom;
    w.values[i] = scale * cum;
  }
  w.values[t - 1] = scale;
  return w;
}

RealArray constraint_backward(const RealArray& v,
                              const std::vector<double>& d_gamma) {
  const std::size_t t = v.size();
  if (d_gamma.size() != t)
    throw ShapeError("constraint_backward: gradient length mismatch");
  double norm_sq = 0.0;
  for (std::size_t i = 1; i < t; ++i) norm_sq += v[i] * v[i];
  if (norm_sq == 0.0)
    throw DomainError("constraint_backward: degenerate all-zero tail");
  const double norm = std::sqrt(norm_sq);
  const double denom = 1.0 + static_cast<double>(t - 1) * kEps;
  const double scale = static_cast<double>(t - 1);

  // d(values)/d(increment_i) is a suffix sum over target indices >= i.
  std::vector<double> d_inc(t, 0.0);
  double suffix = 0.0;
  for (std::size_t i = t; i-- > 1;) {
    suffix += d_gamma[i];
    d_inc[i] = scale * suffix / denom;
  }
  // Through squaring of the unit vector u = v / norm.
  std::vector<double> d_u(t, 0.0);
  double u_dot_du = 0.0;
  for (std::size_t i = 1; i < t; ++i) {
    const double u = v[i] / norm;
    d_u[i] = 2.0 * u * d_inc[i];
    u_dot_du += u * d_u[i];
  }
  RealArray d_v({t});
  d_v[0] = 0.0;
  for (std::size_t i = 1; i < t; ++i) {
    const double u = v[i] / norm;
    d_v[i] = (d_u[i] - u * u_dot_du) / norm;
  }
  return d_v;
}

// ---- TTN -------------------------------------------------------------------

TTN::TTN(const TTNConfig& cfg, std::size_t input_channels)
    : cfg_(cfg), input_channels_(input_channels) {
  if (cfg_.output_length < 2)
    throw ConfigError("TTNConfig: output_length must be >= 2");
  if (cfg_.conv_layers.empty() && cfg_.fc_layers.empty() &&
      cfg_.output_length == 0)
    throw ConfigError("TTNConfig: at least one layer required");
  std::size_t c_in = input_channels_;
  for (const auto& [maps, kernel] : cfg_.conv_layers) {
    stack_.add(make_conv1d(kernel, c_in, maps));
    stack_.add(make_activation(cfg_.activation));
    c_in = maps;
  }
  stack_.add(make_flatten());
  std::size_t dim = cfg_.output_length * c_in;
  for (std::size_t h : cfg_.fc_layers) {
    stack_.add(make_dense(dim, h));
    stack_.add(make_activation(cfg_.activation));
    dim = h;
  }
  stack_.add(make_dense(dim, cfg_.output_length));
}

void TTN::init(Rng& rng) {
  stack_.init(rng);
  // Identity start: zero final weights, uniform-positive bias tail maps to
  // the identity warp through the constraint layer.
  LayerParams* final_params = stack_.layer(stack_.size() - 1).params();
  final_params->weights.fill(0.0);
  final_params->bias.fill(1.0);
  final_params->bias[0] = 0.0;
}

TTNOutput TTN::forward(const Sequence& x) {
  if (x.length() != cfg_.output_length || x.channels() != input_channels_)
    throw ShapeError("TTN::forward: input shape mismatch");
  x_ = x;
  v_ = stack_.forward(x.frames);
  v_[0] = 0.0;  // hard mask, gradient is identically zero
  warp_ = constraint_forward(v_);
  TTNOutput out;
  out.warped = warp_sequence(x, warp_);
  out.warp = warp_;
  out.raw_v = v_;
  return out;
}

RealArray TTN::backward(const RealArray& d_warped) {
  ResampleGradients rg = resample_backward(x_, warp_, d_warped);
  RealArray d_v = constraint_backward(v_, rg.d_positions);
  RealArray d_x_stack = stack_.backward(d_v);
  RealArray d_x = rg.d_input;
  for (std::size_t i = 0; i < d_x.size(); ++i)
    d_x.data[i] += d_x_stack.data[i];
  return d_x;
}

// ---- Model -----------------------------------------------------------------

Model::Model(std::optional<TTNConfig> ttn_cfg, ClassifierConfig cls_cfg,
             std::size_t t, std::size_t n, std::size_t num_classes)
    : t_(t), n_(n), num_classes_(num_classes) {
  if (ttn_cfg) {
    ttn_cfg->output_length = t;
    ttn_.emplace(*ttn_cfg, n);
  }
  std::size_t c_in = n;
  for (const auto& [maps, kernel] : cls_cfg.conv_layers) {
    classifier_.add(make_conv1d(kernel, c_in, maps));
    classifier_.add(make_activation(cls_cfg.activation));
    c_in = maps;
  }
  classifier_.add(make_flatten());
  std::size_t dim = t * c_in;
  for (std::size_t h : cls_cfg.fc_layers) {
    classifier_.add(make_dense(dim, h));
    classifier_.add(make_activation(cls_cfg.activation));
    dim = h;
  }
  classifier_.add(make_dense(dim, num_classes));
}

void Model::init(std::uint64_t seed) {
  Rng cls_rng(Rng::seed_mix(seed, 1));
  classifier_.init(cls_rng);
  // Zero final logits layer: the first loss is exactly ln(num_classes).
  LayerParams* last = classifier_.layer(classifier_.size() - 1).params();
  last->weights.fill(0.0);
  last->bias.fill(0.0);
  if (ttn_) {
    Rng ttn_rng(Rng::seed_mix(seed, 2));
    ttn_->init(ttn_rng);
  }
}

RealArray Model::forward(const Sequence& x) {
  if (x.length() != t_ || x.channels() != n_)
    throw ShapeError("Model::forward: input shape mismatch");
  input_ = x;
  const RealArray* h;
  if (ttn_) {
    last_ttn_out_ = ttn_->forward(x);
    h = &last_ttn_out_->warped.frames;
  } else {
    last_ttn_out_.reset();
    h = &x.frames;
  }
  RealArray a = *h;
  for (std::size_t i = 0; i < classifier_.size(); ++i) {
    if (i + 1 == classifier_.size()) penultimate_ = a;
    a = classifier_.layer(i).forward(a);
  }
  return a;
}

void Model::backward(const RealArray& d_logits) {
  RealArray d = classifier_.backward(d_logits);
  if (ttn_) ttn_->backward(d);
}

void Model::zero_grads() {
  classifier_.zero_grads();
  if (ttn_) ttn_->stack().zero_grads();
}

std::vector<std::pair<std::string, RealArray*>> Model::named_params() {
  std::vector<std::pair<std::string, RealArray*>> out;
  auto collect = [&out](Stack& s, const std::string& prefix) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (LayerParams* p = s.layer(i).params()) {
        const std::string base = prefix + "." + std::to_string(i);
        out.emplace_back(base + ".weight", &p->weights);
        out.emplace_back(base + ".bias", &p->bias);
      }
    }
  };
  if (ttn_) collect(ttn_->stack(), "ttn");
  collect(classifier_, "classifier");
  return out;
}

void Model::save_checkpoint(const std::string& path) {
  std::vector<std::pair<std::string, const RealArray*>> arrays;
  for (auto& [name, arr] : named_params()) arrays.emplace_back(name, arr);
  save_named_arrays(path, arrays);
}

void Model::load_checkpoint(const std::string& path) {
  auto loaded = load_named_arrays(path);
  std::map<std::string, RealArray*> dest;
  for (auto& [name, arr] : named_params()) dest[name] = arr;
  if (loaded.size() != dest.size())
    throw ConfigError("checkpoint/model parameter count mismatch: " + path);
  for (auto& [name, arr] : loaded) {
    auto it = dest.find(name);
    if (it == dest.end())
      throw ConfigError("checkpoint parameter not in model: " + name);
    if (it->second->shape != arr.shape)
      throw ConfigError("checkpoint shape mismatch for " + name);
    *it->second = std::move(arr);
  }
}

}  // namespace warpnet
