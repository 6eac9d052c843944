#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "warpnet/errors.hpp"
#include "warpnet/experiment.hpp"
#include "warpnet/gradcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace warpnet;

namespace {

// WARPNET_THREADS caps worker threads. The compute kernels are currently
// single-threaded, so any positive cap is honored; the value is validated
// here so misconfiguration fails loudly.
int resolve_thread_cap() {
  const char* env = std::getenv("WARPNET_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1)
    throw ConfigError("WARPNET_THREADS must be a positive integer, got '" +
                      std::string(env) + "'");
  return static_cast<int>(v);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string pct(double frac) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * frac);
  return buf;
}

struct TrainFlags {
  std::string config_path;
  std::string out_dir;
  bool no_ttn = false;
  std::optional<std::uint64_t> seed;
  std::optional<long> iterations;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
};

ExperimentConfig load_config(const TrainFlags& f) {
  ExperimentConfig cfg = parse_experiment_config(read_file(f.config_path));
  if (f.no_ttn) cfg.ttn.reset();
  if (f.seed) {
    cfg.train.seed = *f.seed;
    cfg.dataset.seed = *f.seed;
  }
  if (f.iterations) cfg.train.iterations = *f.iterations;
  if (f.lr) cfg.train.base_lr = *f.lr;
  if (f.batch_size) cfg.train.batch_size = *f.batch_size;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  return cfg;
}

int cmd_gen(const GenSpec& spec, const std::string& out_dir) {
  auto [train_ds, test_ds] = generate(spec);
  fs::create_directories(out_dir);
  fs::path out(out_dir);
  save_dataset(train_ds, (out / "train.csv").string(),
               (out / "meta.json").string());
  // The test split shares the generation metadata; its sidecar is derived
  // from the same meta path by the loader, so only one meta.json is written.
  save_dataset(test_ds, (out / "test.csv").string(),
               (out / "test.meta.json").string());
  std::cout << "gen " << dataset_kind_to_string(spec.kind) << ": "
            << train_ds.size() << " train / " << test_ds.size()
            << " test sequences of length " << train_ds.length() << " -> "
            << out_dir << "\n";
  return 0;
}

int cmd_train(const TrainFlags& flags) {
  ExperimentConfig cfg = load_config(flags);
  fs::create_directories(cfg.out_dir);
  fs::path out(cfg.out_dir);

  std::optional<Model> model;
  ExperimentResult result = run_experiment(cfg, model);

  model->save_checkpoint((out / "checkpoint.bin").string());
  save_history_csv(result.history, (out / "history.csv").string());

  json summary;
  summary["final_accuracy"] = result.final_accuracy;
  summary["final_accuracy_pct"] = pct(result.final_accuracy);
  summary["iterations"] = cfg.train.iterations;
  summary["seed"] = cfg.train.seed;
  summary["ttn"] = cfg.ttn.has_value();
  summary["dataset"] = dataset_kind_to_string(cfg.dataset.kind);
  write_file(out / "summary.json", summary.dump(2) + "\n");

  std::cout << "train: final test accuracy " << pct(result.final_accuracy)
            << "% (" << (cfg.ttn ? "with TTN" : "no TTN") << ") -> "
            << cfg.out_dir << "\n";
  return 0;
}

struct EvalFlags {
  std::string config_path;
  std::string checkpoint;
  std::string data_path;  // optional test CSV override
  std::size_t kmeans = 0;
  std::size_t runs = 100;
  bool warp_report = false;
  std::uint64_t seed = 0;
};

std::pair<Model, Dataset> load_model_and_test(const std::string& config_path,
                                              const std::string& checkpoint,
                                              const std::string& data_path) {
  ExperimentConfig cfg = parse_experiment_config(read_file(config_path));
  Dataset test;
  if (!data_path.empty()) {
    test = load_dataset(data_path);
  } else {
    auto [train_ds, test_ds] = prepare_datasets(cfg);
    test = std::move(test_ds);
  }
  Model model = build_model(cfg, test.length(), test.channels(),
                            test.num_classes);
  model.init(cfg.train.seed);
  model.load_checkpoint(checkpoint);
  return {std::move(model), std::move(test)};
}

int cmd_eval(const EvalFlags& flags) {
  auto [model, test] =
      load_model_and_test(flags.config_path, flags.checkpoint, flags.data_path);

  double acc = evaluate_accuracy(model, test);
  std::cout << "accuracy: " << pct(acc) << "%\n";

  if (flags.kmeans > 0) {
    auto feats = extract_features(model, test);
    ClusteringScores s =
        clustering_metrics(feats, test.labels, flags.kmeans, flags.runs,
                           flags.seed);
    std::cout << "clustering (k=" << flags.kmeans << ", runs=" << flags.runs
              << "): purity " << s.purity << ", homogeneity " << s.homogeneity
              << ", completeness " << s.completeness << "\n";
  }

  if (flags.warp_report) {
    if (!model.has_ttn())
      throw ConfigError("--warp-report requires a model with a TTN");
    WarpReport r = discriminative_warp_report(model, test, 200, flags.seed);
    std::cout << "warp report (" << r.intra_pairs << " intra / "
              << r.inter_pairs << " inter pairs):\n"
              << "  intra distance pre " << r.mean_intra_pre << " -> post "
              << r.mean_intra_post << " (closer on " << pct(r.frac_intra_closer)
              << "% of pairs)\n"
              << "  inter distance pre " << r.mean_inter_pre << " -> post "
              << r.mean_inter_post << " (farther on "
              << pct(r.frac_inter_farther) << "% of pairs)\n";
  }
  return 0;
}

struct DumpFlags {
  std::string config_path;
  std::string checkpoint;
  std::string data_path;
  std::string out_dir = ".";
  bool postprocess = false;
};

int cmd_dump_warps(const DumpFlags& flags) {
  auto [model, test] =
      load_model_and_test(flags.config_path, flags.checkpoint, flags.data_path);
  if (!model.has_ttn()) throw ConfigError("dump-warps requires a TTN model");

  std::vector<TTNOutput> outs;
  outs.reserve(test.size());
  for (auto& seq : test.sequences) {
    model.forward(seq);
    outs.push_back(*model.last_ttn_output());
  }
  std::vector<Sequence> post;
  if (flags.postprocess) post = mean_warp_postprocess(outs);

  fs::create_directories(flags.out_dir);
  fs::path out_path = fs::path(flags.out_dir) / "warps.csv";
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot write " + out_path.string());

  const std::size_t n = test.channels();
  f << "sample,frame";
  for (std::size_t j = 0; j < n; ++j) f << ",x_c" << j;
  f << ",v,gamma";
  for (std::size_t j = 0; j < n; ++j) f << ",warped_c" << j;
  if (flags.postprocess)
    for (std::size_t j = 0; j < n; ++j) f << ",post_c" << j;
  f << "\n";

  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    f << ',' << buf;
  };
  for (std::size_t s = 0; s < test.size(); ++s) {
    const TTNOutput& o = outs[s];
    for (std::size_t i = 0; i < test.length(); ++i) {
      f << s << ',' << i;
      for (std::size_t j = 0; j < n; ++j) num(test.sequences[s].frames.at(i, j));
      num(o.raw_v[i]);
      num(o.warp.values[i]);
      for (std::size_t j = 0; j < n; ++j) num(o.warped.frames.at(i, j));
      if (flags.postprocess)
        for (std::size_t j = 0; j < n; ++j) num(post[s].frames.at(i, j));
      f << "\n";
    }
  }
  std::cout << "dump-warps: " << test.size() * test.length() << " rows -> "
            << out_path.string() << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, const std::string& corrupt) {
  auto results = run_gradient_checks(seed, corrupt);
  bool all_ok = true;
  for (const auto& r : results) {
    std::printf("%-16s max_rel_error %.3e  %s\n", r.op.c_str(),
                r.max_rel_error, r.passed ? "ok" : "FAIL");
    all_ok = all_ok && r.passed;
  }
  if (!all_ok) {
    for (const auto& r : results)
      if (!r.passed) std::cout << "gradient check failed: " << r.op << "\n";
    return 1;
  }
  std::cout << "all gradient checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-warping network experiments"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  GenSpec spec;
  std::string kind_str, gen_out = ".";
  gen->add_option("--kind", kind_str,
                  "gauss2 | nwave_vs_gauss | mixture_vs_gauss")
      ->required();
  gen->add_option("--seed", spec.seed, "RNG seed");
  gen->add_option("--t", spec.t, "sequence length");
  gen->add_option("--train-n", spec.train_count, "training sequences");
  gen->add_option("--test-n", spec.test_count, "test sequences");
  gen->add_option("--noise", spec.noise_sigma, "additive noise std");
  gen->add_option("--roughness", spec.warp_roughness, "random-warp roughness");
  gen->add_flag("--warped,!--unwarped", spec.warped,
                "apply random warps (default on)");
  gen->add_option("--out", gen_out, "output directory");

  // train
  auto* tr = app.add_subcommand("train", "Train a model from a config");
  TrainFlags tf;
  tr->add_option("--config", tf.config_path, "experiment config JSON")
      ->required();
  tr->add_flag("--no-ttn", tf.no_ttn, "drop the TTN (baseline run)");
  tr->add_option("--seed", tf.seed, "override train and dataset seed");
  tr->add_option("--iterations", tf.iterations, "override iteration count");
  tr->add_option("--lr", tf.lr, "override base learning rate");
  tr->add_option("--batch-size", tf.batch_size, "override batch size");
  tr->add_option("--out", tf.out_dir, "override output directory");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  EvalFlags ef;
  ev->add_option("--config", ef.config_path, "experiment config JSON")
      ->required();
  ev->add_option("--checkpoint", ef.checkpoint, "checkpoint file")->required();
  ev->add_option("--data", ef.data_path, "test CSV (default: config dataset)");
  ev->add_option("--kmeans", ef.kmeans, "cluster count for feature clustering");
  ev->add_option("--runs", ef.runs, "k-means restarts");
  ev->add_flag("--warp-report", ef.warp_report,
               "print the discriminative-warp distance report");
  ev->add_option("--seed", ef.seed, "seed for clustering / pair sampling");

  // dump-warps
  auto* dw = app.add_subcommand("dump-warps",
                                "Export inputs, warps and warped outputs");
  DumpFlags df;
  dw->add_option("--config", df.config_path, "experiment config JSON")
      ->required();
  dw->add_option("--checkpoint", df.checkpoint, "checkpoint file")->required();
  dw->add_option("--data", df.data_path, "test CSV (default: config dataset)");
  dw->add_option("--out", df.out_dir, "output directory");
  dw->add_flag("--postprocess", df.postprocess,
               "add mean-warp post-processed output columns");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck",
                                "Finite-difference check of all gradients");
  std::uint64_t gc_seed = 1234;
  std::string gc_corrupt;
  gc->add_option("--seed", gc_seed, "RNG seed");
  gc->add_option("--corrupt", gc_corrupt,
                 "test hook: corrupt this op's analytic gradient")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    resolve_thread_cap();
    if (gen->parsed()) {
      spec.kind = dataset_kind_from_string(kind_str);
      return cmd_gen(spec, gen_out);
    }
    if (tr->parsed()) return cmd_train(tf);
    if (ev->parsed()) return cmd_eval(ef);
    if (dw->parsed()) return cmd_dump_warps(df);
    if (gc->parsed()) return cmd_gradcheck(gc_seed, gc_corrupt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: training diverged: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
