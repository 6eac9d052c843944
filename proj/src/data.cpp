#include "warpnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "warpnet/errors.hpp"
#include "warpnet/rng.hpp"

namespace warpnet {

namespace {

double gauss(double t, double center, double width) {
  const double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

double unit_time(std::size_t i, std::size_t t) {
  return static_cast<double>(i) / static_cast<double>(t - 1);
}

constexpr double kShapeWidth = 0.08;

Sequence from_channel(const std::vector<double>& values, int label) {
  Sequence s = make_sequence(values.size(), 1, label);
  for (std::size_t i = 0; i < values.size(); ++i) s.frames.at(i, 0) = values[i];
  return s;
}

std::string spec_params_json(const GenSpec& spec) {
  nlohmann::json j;
  j["t"] = spec.t;
  j["train_count"] = spec.train_count;
  j["test_count"] = spec.test_count;
  j["noise_sigma"] = spec.noise_sigma;
  j["warp_roughness"] = spec.warp_roughness;
  j["warped"] = spec.warped;
  return j.dump();
}

// One split. Class balance is exact: sample i gets label i % 2.
template <typename SampleFn>
Dataset build_split(const GenSpec& spec, std::size_t count, Rng rng,
                    const char* generator, SampleFn&& sample) {
  Dataset ds;
  ds.generator = generator;
  ds.seed = spec.seed;
  ds.params_json = spec_params_json(spec);
  ds.sequences.reserve(count);
  ds.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % 2);
    ds.sequences.push_back(sample(label, rng));
    ds.labels.push_back(label);
  }
  return ds;
}

template <typename SampleFn>
std::pair<Dataset, Dataset> build_pair(const GenSpec& spec,
                                       const char* generator,
                                       SampleFn&& sample) {
  Rng base(spec.seed);
  Dataset train =
      build_split(spec, spec.train_count, base.substream(1), generator, sample);
  Dataset test =
      build_split(spec, spec.test_count, base.substream(2), generator, sample);
  return {std::move(train), std::move(test)};
}

void add_noise(Sequence& s, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  for (double& v : s.frames.data) v += rng.normal(0.0, sigma);
}

}  // namespace

std::vector<double> dataset1_template(int label, std::size_t t,
                                      double amplitude) {
  const double center = label == 0 ? 0.55 : 0.45;
  std::vector<double> out(t);
  for (std::size_t i = 0; i < t; ++i)
    out[i] = amplitude * gauss(unit_time(i, t), center, kShapeWidth);
  return out;
}

std::vector<double> dataset2_template(int label, std::size_t t) {
  std::vector<double> out(t);
  for (std::size_t i = 0; i < t; ++i) {
    const double u = unit_time(i, t);
    if (label == 0) {
      // N-wave: positive lobe then negative lobe.
      out[i] = gauss(u, 0.35, kShapeWidth) - gauss(u, 0.65, kShapeWidth);
    } else {
      out[i] = gauss(u, 0.5, kShapeWidth);
    }
  }
  return out;
}

std::vector<double> dataset_supp_template(int label, std::size_t t) {
  // Mixture components at 0.35 / 0.65; class 2 is a single Gaussian with the
  // same first two moments (sigma^2 = 0.08^2 + 0.15^2) and matched area.
  const double mix_sigma = std::sqrt(kShapeWidth * kShapeWidth + 0.15 * 0.15);
  const double matched_amp = 2.0 * kShapeWidth / mix_sigma;
  std::vector<double> out(t);
  for (std::size_t i = 0; i < t; ++i) {
    const double u = unit_time(i, t);
    if (label == 0) {
      out[i] = gauss(u, 0.35, kShapeWidth) + gauss(u, 0.65, kShapeWidth);
    } else {
      out[i] = matched_amp * gauss(u, 0.5, mix_sigma);
    }
  }
  return out;
}

std::pair<Dataset, Dataset> gen_dataset1(const GenSpec& spec) {
  return build_pair(spec, "gauss2", [&spec](int label, Rng& rng) {
    const double amplitude = rng.uniform(0.5, 1.5);
    Sequence s = from_channel(dataset1_template(label, spec.t, amplitude), label);
    add_noise(s, spec.noise_sigma, rng);
    return s;
  });
}

namespace {

template <typename TemplateFn>
std::pair<Dataset, Dataset> gen_warped_pair(const GenSpec& spec,
                                            const char* generator,
                                            TemplateFn&& templ) {
  return build_pair(spec, generator, [&spec, &templ](int label, Rng& rng) {
    Sequence s = from_channel(templ(label, spec.t), label);
    if (spec.warped) {
      WarpFunction w = random_warp(spec.t, spec.warp_roughness, rng);
      s = warp_sequence(s, w);
    }
    add_noise(s, spec.noise_sigma, rng);
    return s;
  });
}

}  // namespace

std::pair<Dataset, Dataset> gen_dataset2(const GenSpec& spec) {
  return gen_warped_pair(spec, "nwave_vs_gauss",
                         [](int label, std::size_t t) {
                           return dataset2_template(label, t);
                         });
}

std::pair<Dataset, Dataset> gen_dataset_supp(const GenSpec& spec) {
  return gen_warped_pair(spec, "mixture_vs_gauss",
                         [](int label, std::size_t t) {
                           return dataset_supp_template(label, t);
                         });
}

std::pair<Dataset, Dataset> generate(const GenSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::Gauss2:
      return gen_dataset1(spec);
    case DatasetKind::NwaveVsGauss:
      return gen_dataset2(spec);
    case DatasetKind::MixtureVsGauss:
      return gen_dataset_supp(spec);
    default:
      throw ConfigError("generate: unsupported dataset kind");
  }
}

Dataset apply_affine_distortion(const Dataset& ds,
                                std::pair<double, double> a_range,
                                std::pair<int, int> b_range,
                                std::uint64_t seed) {
  if (ds.length() != 50)
    throw ShapeError("apply_affine_distortion: sequences must have length 50");
  constexpr std::size_t kOutLen = 100;
  constexpr std::size_t kOffset = 25;
  Rng rng(seed);
  Dataset out;
  out.num_classes = ds.num_classes;
  out.generator = ds.generator + "+affine";
  out.seed = seed;
  out.params_json = ds.params_json;
  out.labels = ds.labels;
  out.sequences.reserve(ds.size());
  const std::size_t n = ds.channels();
  for (const Sequence& src : ds.sequences) {
    Sequence embedded = make_sequence(kOutLen, n, src.label);
    for (std::size_t i = 0; i < 50; ++i)
      for (std::size_t j = 0; j < n; ++j)
        embedded.frames.at(kOffset + i, j) = src.frames.at(i, j);
    const double a = rng.uniform(a_range.first, a_range.second);
    const int b_span = b_range.second - b_range.first + 1;
    const int b = b_range.first +
                  static_cast<int>(rng.uniform_index(
                      static_cast<std::uint64_t>(b_span)));
    WarpFunction w = affine_warp(a, static_cast<double>(b), kOutLen);
    out.sequences.push_back(warp_sequence(embedded, w));
  }
  return out;
}

Sequence resample_to_length(const Sequence& x, std::size_t target_t) {
  if (target_t < 2)
    throw DomainError("resample_to_length: target length must be >= 2");
  if (target_t == x.length()) return x;
  const std::size_t t = x.length();
  const std::size_t n = x.channels();
  Sequence y = make_sequence(target_t, n, x.label);
  const double step = static_cast<double>(t - 1) /
                      static_cast<double>(target_t - 1);
  for (std::size_t i = 0; i < target_t; ++i) {
    const double pos = std::min(static_cast<double>(i) * step,
                                static_cast<double>(t - 1));
    const std::size_t k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    for (std::size_t j = 0; j < n; ++j) {
      y.frames.at(i, j) =
          frac == 0.0 ? x.frames.at(k, j)
                      : x.frames.at(k, j) * (1.0 - frac) +
                            x.frames.at(k + 1, j) * frac;
    }
  }
  return y;
}

Sequence zero_pad(const Sequence& x, std::size_t target_t) {
  if (target_t < x.length())
    throw ShapeError("zero_pad: target length shorter than the sequence");
  if (target_t == x.length()) return x;
  Sequence y = make_sequence(target_t, x.channels(), x.label);
  std::copy(x.frames.data.begin(), x.frames.data.end(), y.frames.data.begin());
  return y;
}

// ---- file I/O --------------------------------------------------------------

void save_dataset(const Dataset& ds, const std::string& csv_path,
                  const std::string& meta_path) {
  std::ofstream os(csv_path);
  if (!os) throw ParseError("cannot open for writing: " + csv_path);
  const std::size_t t = ds.length(), n = ds.channels();
  os << "label";
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < n; ++j) os << ",t" << i << "c" << j;
  os << "\n";
  char buf[64];
  for (std::size_t s = 0; s < ds.size(); ++s) {
    os << ds.labels[s];
    for (double v : ds.sequences[s].frames.data) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      os << buf;
    }
    os << "\n";
  }
  if (!os) throw ParseError("write failed: " + csv_path);

  nlohmann::json meta;
  meta["generator"] = ds.generator;
  meta["seed"] = ds.seed;
  meta["t"] = t;
  meta["n"] = n;
  meta["count"] = ds.size();
  meta["num_classes"] = ds.num_classes;
  meta["params"] = ds.params_json.empty()
                       ? nlohmann::json(nullptr)
                       : nlohmann::json::parse(ds.params_json);
  std::ofstream ms(meta_path);
  if (!ms) throw ParseError("cannot open for writing: " + meta_path);
  ms << meta.dump(2) << "\n";
}

Dataset load_dataset(const std::string& csv_path) {
  std::ifstream is(csv_path);
  if (!is) throw ParseError("cannot open: " + csv_path);
  std::string line;
  if (!std::getline(is, line))
    throw ParseError(csv_path + ": line 1: missing header");
  // Infer T and N from the header.
  std::size_t t = 0, n = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (cell != "label")
      throw ParseError(csv_path + ": line 1: expected `label` header");
    while (std::getline(ss, cell, ',')) {
      std::size_t cpos = cell.find('c');
      if (cell.empty() || cell[0] != 't' || cpos == std::string::npos)
        throw ParseError(csv_path + ": line 1: malformed column `" + cell + "`");
      t = std::max(t, static_cast<std::size_t>(
                          std::stoull(cell.substr(1, cpos - 1))) + 1);
      n = std::max(n, static_cast<std::size_t>(
                          std::stoull(cell.substr(cpos + 1))) + 1);
    }
  }
  if (t < 2 || n < 1) throw ParseError(csv_path + ": line 1: empty schema");
  Dataset ds;
  std::size_t line_no = 1;
  int max_label = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ','))
      throw ParseError(csv_path + ": line " + std::to_string(line_no) +
                       ": missing label");
    int label;
    try {
      label = std::stoi(cell);
    } catch (const std::exception&) {
      throw ParseError(csv_path + ": line " + std::to_string(line_no) +
                       ": bad label `" + cell + "`");
    }
    Sequence s = make_sequence(t, n, label);
    for (std::size_t i = 0; i < t * n; ++i) {
      if (!std::getline(ss, cell, ','))
        throw ParseError(csv_path + ": line " + std::to_string(line_no) +
                         ": truncated row (expected " +
                         std::to_string(t * n) + " values)");
      try {
        s.frames.data[i] = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError(csv_path + ": line " + std::to_string(line_no) +
                         ": bad value `" + cell + "`");
      }
    }
    ds.sequences.push_back(std::move(s));
    ds.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

Dataset load_skeleton_csv(const std::string& skeleton_path,
                          const std::string& labels_path,
                          std::size_t joints, std::size_t root_joint) {
  if (root_joint >= joints)
    throw ConfigError("load_skeleton_csv: root joint out of range");
  std::ifstream is(skeleton_path);
  if (!is) throw ParseError("cannot open: " + skeleton_path);
  const std::size_t n = joints * 3;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> frames_by_seq;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("seq_id", 0) == 0) continue;  // header
    std::stringstream ss(line);
    std::string seq_id, cell;
    if (!std::getline(ss, seq_id, ',') || !std::getline(ss, cell, ','))
      throw ParseError(skeleton_path + ": line " + std::to_string(line_no) +
                       ": expected seq_id,frame,...");
    std::vector<double> frame(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(ss, cell, ','))
        throw ParseError(skeleton_path + ": line " + std::to_string(line_no) +
                         ": truncated row (expected " + std::to_string(n) +
                         " coordinates)");
      try {
        frame[i] = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError(skeleton_path + ": line " + std::to_string(line_no) +
                         ": bad value `" + cell + "`");
      }
    }
    if (frames_by_seq.find(seq_id) == frames_by_seq.end())
      order.push_back(seq_id);
    frames_by_seq[seq_id].push_back(std::move(frame));
  }
  if (order.empty()) throw ParseError(skeleton_path + ": no frames");

  std::map<std::string, int> labels;
  {
    std::ifstream ls(labels_path);
    if (!ls) throw ParseError("cannot open: " + labels_path);
    std::size_t lno = 0;
    while (std::getline(ls, line)) {
      ++lno;
      if (line.empty()) continue;
      if (lno == 1 && line.rfind("seq_id", 0) == 0) continue;
      std::stringstream ss(line);
      std::string seq_id, cell;
      if (!std::getline(ss, seq_id, ',') || !std::getline(ss, cell, ','))
        throw ParseError(labels_path + ": line " + std::to_string(lno) +
                         ": expected seq_id,label");
      labels[seq_id] = std::stoi(cell);
    }
  }

  Dataset ds;
  ds.generator = "skeleton_csv";
  std::size_t t = frames_by_seq[order.front()].size();
  int max_label = 0;
  for (const std::string& id : order) {
    const auto& frames = frames_by_seq[id];
    if (frames.size() != t)
      throw ShapeError("load_skeleton_csv: inconsistent sequence lengths");
    auto it = labels.find(id);
    if (it == labels.end())
      throw ParseError(labels_path + ": missing label for sequence " + id);
    Sequence s = make_sequence(t, n, it->second);
    // Root joint of frame 0 moves to the origin.
    const double rx = frames[0][root_joint * 3];
    const double ry = frames[0][root_joint * 3 + 1];
    const double rz = frames[0][root_joint * 3 + 2];
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < joints; ++j) {
        s.frames.at(i, j * 3) = frames[i][j * 3] - rx;
        s.frames.at(i, j * 3 + 1) = frames[i][j * 3 + 1] - ry;
        s.frames.at(i, j * 3 + 2) = frames[i][j * 3 + 2] - rz;
      }
    ds.sequences.push_back(std::move(s));
    ds.labels.push_back(it->second);
    max_label = std::max(max_label, it->second);
  }
  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

}  // namespace warpnet
