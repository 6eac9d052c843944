#include "warpnet/experiment.hpp"

#include "json.hpp"
#include "warpnet/errors.hpp"

namespace warpnet {

using nlohmann::json;

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "gauss2") return DatasetKind::Gauss2;
  if (s == "nwave_vs_gauss") return DatasetKind::NwaveVsGauss;
  if (s == "mixture_vs_gauss") return DatasetKind::MixtureVsGauss;
  if (s == "custom") return DatasetKind::Custom;
  throw ConfigError("unknown dataset kind: " + s);
}

std::string dataset_kind_to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::Gauss2:
      return "gauss2";
    case DatasetKind::NwaveVsGauss:
      return "nwave_vs_gauss";
    case DatasetKind::MixtureVsGauss:
      return "mixture_vs_gauss";
    default:
      return "custom";
  }
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field `") + key +
                      "` has the wrong type");
  }
}

GenSpec gen_spec_from_json(const json& j) {
  GenSpec spec;
  if (j.contains("kind"))
    spec.kind = dataset_kind_from_string(j.at("kind").get<std::string>());
  spec.t = get_or<std::size_t>(j, "t", spec.t);
  spec.train_count = get_or<std::size_t>(j, "train_n", spec.train_count);
  spec.test_count = get_or<std::size_t>(j, "test_n", spec.test_count);
  spec.noise_sigma = get_or<double>(j, "noise", spec.noise_sigma);
  spec.warp_roughness = get_or<double>(j, "roughness", spec.warp_roughness);
  spec.warped = get_or<bool>(j, "warped", spec.warped);
  spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
  if (spec.train_count == 0 || spec.test_count == 0)
    throw ConfigError("config field `train_n`/`test_n` must be positive");
  return spec;
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw ConfigError("unknown activation: " + s);
}

std::vector<std::pair<std::size_t, std::size_t>> conv_list(const json& j,
                                                           const char* key) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (!j.contains(key)) return out;
  for (const auto& e : j.at(key)) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError(std::string("config field `") + key +
                        "` entries must be [feature_maps, kernel]");
    out.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  return out;
}

}  // namespace

GenSpec parse_gen_spec(const std::string& json_text) {
  try {
    return gen_spec_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dataset spec parse error: ") + e.what());
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    if (d.contains("train_path")) {
      cfg.train_path = d.at("train_path").get<std::string>();
      cfg.test_path = d.at("test_path").get<std::string>();
    } else {
      cfg.dataset = gen_spec_from_json(d);
    }
    if (d.contains("affine_distortion")) {
      const json& a = d.at("affine_distortion");
      AffineDistortionSpec ad;
      ad.a_min = get_or<double>(a, "a_min", ad.a_min);
      ad.a_max = get_or<double>(a, "a_max", ad.a_max);
      ad.b_min = get_or<int>(a, "b_min", ad.b_min);
      ad.b_max = get_or<int>(a, "b_max", ad.b_max);
      ad.seed = get_or<std::uint64_t>(a, "seed", ad.seed);
      cfg.affine_distortion = ad;
    }
  }
  if (j.contains("ttn") && !j.at("ttn").is_null()) {
    const json& t = j.at("ttn");
    TTNConfig ttn;
    ttn.conv_layers = conv_list(t, "conv");
    ttn.fc_layers = get_or<std::vector<std::size_t>>(t, "fc", {});
    if (t.contains("activation"))
      ttn.activation =
          activation_from_string(t.at("activation").get<std::string>());
    cfg.ttn = ttn;
  }
  if (j.contains("classifier")) {
    const json& c = j.at("classifier");
    cfg.classifier.conv_layers = conv_list(c, "conv");
    cfg.classifier.fc_layers =
        get_or<std::vector<std::size_t>>(c, "fc", {});
    if (c.contains("activation"))
      cfg.classifier.activation =
          activation_from_string(c.at("activation").get<std::string>());
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    if (t.contains("optimizer")) {
      const std::string o = t.at("optimizer").get<std::string>();
      if (o == "adam")
        cfg.train.optimizer = OptimizerKind::Adam;
      else if (o == "momentum")
        cfg.train.optimizer = OptimizerKind::Momentum;
      else
        throw ConfigError("config field `optimizer` must be adam|momentum");
    }
    cfg.train.base_lr = get_or<double>(t, "base_lr", cfg.train.base_lr);
    cfg.train.ttn_lr_ratio =
        get_or<double>(t, "ttn_lr_ratio", cfg.train.ttn_lr_ratio);
    cfg.train.iterations = get_or<long>(t, "iterations", cfg.train.iterations);
    cfg.train.batch_size =
        get_or<std::size_t>(t, "batch_size", cfg.train.batch_size);
    cfg.train.eval_every = get_or<long>(t, "eval_every", cfg.train.eval_every);
    cfg.train.seed = get_or<std::uint64_t>(t, "seed", cfg.train.seed);
    if (t.contains("lr_schedule"))
      for (const auto& e : t.at("lr_schedule"))
        cfg.train.lr_schedule.emplace_back(e[0].get<long>(),
                                           e[1].get<double>());
  }
  cfg.out_dir = get_or<std::string>(j, "out", cfg.out_dir);
  return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  json d;
  if (cfg.train_path) {
    d["train_path"] = *cfg.train_path;
    d["test_path"] = *cfg.test_path;
  } else {
    d["kind"] = dataset_kind_to_string(cfg.dataset.kind);
    d["t"] = cfg.dataset.t;
    d["train_n"] = cfg.dataset.train_count;
    d["test_n"] = cfg.dataset.test_count;
    d["noise"] = cfg.dataset.noise_sigma;
    d["roughness"] = cfg.dataset.warp_roughness;
    d["warped"] = cfg.dataset.warped;
    d["seed"] = cfg.dataset.seed;
  }
  if (cfg.affine_distortion) {
    d["affine_distortion"] = {{"a_min", cfg.affine_distortion->a_min},
                              {"a_max", cfg.affine_distortion->a_max},
                              {"b_min", cfg.affine_distortion->b_min},
                              {"b_max", cfg.affine_distortion->b_max},
                              {"seed", cfg.affine_distortion->seed}};
  }
  j["dataset"] = d;
  if (cfg.ttn) {
    json t;
    t["conv"] = json::array();
    for (const auto& [m, k] : cfg.ttn->conv_layers)
      t["conv"].push_back({m, k});
    t["fc"] = cfg.ttn->fc_layers;
    t["activation"] = cfg.ttn->activation == Activation::Tanh ? "tanh" : "relu";
    j["ttn"] = t;
  } else {
    j["ttn"] = nullptr;
  }
  json c;
  c["conv"] = json::array();
  for (const auto& [m, k] : cfg.classifier.conv_layers) c["conv"].push_back({m, k});
  c["fc"] = cfg.classifier.fc_layers;
  c["activation"] =
      cfg.classifier.activation == Activation::Tanh ? "tanh" : "relu";
  j["classifier"] = c;
  json t;
  t["optimizer"] =
      cfg.train.optimizer == OptimizerKind::Adam ? "adam" : "momentum";
  t["base_lr"] = cfg.train.base_lr;
  t["ttn_lr_ratio"] = cfg.train.ttn_lr_ratio;
  t["iterations"] = cfg.train.iterations;
  t["batch_size"] = cfg.train.batch_size;
  t["eval_every"] = cfg.train.eval_every;
  t["seed"] = cfg.train.seed;
  t["lr_schedule"] = json::array();
  for (const auto& [at, mult] : cfg.train.lr_schedule)
    t["lr_schedule"].push_back({at, mult});
  j["train"] = t;
  j["out"] = cfg.out_dir;
  return j.dump(2);
}

std::pair<Dataset, Dataset> prepare_datasets(const ExperimentConfig& cfg) {
  std::pair<Dataset, Dataset> ds;
  if (cfg.train_path) {
    ds.first = load_dataset(*cfg.train_path);
    ds.second = load_dataset(*cfg.test_path);
  } else {
    ds = generate(cfg.dataset);
  }
  if (cfg.affine_distortion) {
    const AffineDistortionSpec& a = *cfg.affine_distortion;
    ds.first = apply_affine_distortion(ds.first, {a.a_min, a.a_max},
                                       {a.b_min, a.b_max},
                                       Rng::seed_mix(a.seed, 1));
    ds.second = apply_affine_distortion(ds.second, {a.a_min, a.a_max},
                                        {a.b_min, a.b_max},
                                        Rng::seed_mix(a.seed, 2));
  }
  return ds;
}

Model build_model(const ExperimentConfig& cfg, std::size_t t, std::size_t n,
                  std::size_t num_classes) {
  std::optional<TTNConfig> ttn_cfg = cfg.ttn;
  if (ttn_cfg) ttn_cfg->output_length = t;
  return Model(ttn_cfg, cfg.classifier, t, n, num_classes);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                std::optional<Model>& model_out,
                                Dataset* train_out, Dataset* test_out) {
  auto [train_ds, test_ds] = prepare_datasets(cfg);
  model_out.emplace(build_model(cfg, train_ds.length(), train_ds.channels(),
                                train_ds.num_classes));
  model_out->init(cfg.train.seed);
  ExperimentResult result;
  result.history = train(*model_out, train_ds, test_ds, cfg.train);
  result.final_accuracy = result.history.final_accuracy;
  if (train_out) *train_out = std::move(train_ds);
  if (test_out) *test_out = std::move(test_ds);
  return result;
}

}  // namespace warpnet
