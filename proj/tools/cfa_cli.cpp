// Command-line front end: synth, ingest, train, evaluate, sweep, oco.
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "cfa/data.hpp"
#include "cfa/error.hpp"
#include "cfa/features.hpp"
#include "cfa/image.hpp"
#include "cfa/pipeline.hpp"

namespace {

using namespace cfa;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// Flag values keyed by config-file key (dashes become underscores). Only
// flags given on the command line are recorded, so they override the file.
struct FlagSet {
  std::map<std::string, std::string> values;

  void add(CLI::App* app, const std::string& flag, const std::string& help) {
    std::string key = flag;
    for (auto& ch : key) {
      if (ch == '-') ch = '_';
    }
    app->add_option_function<std::string>(
        "--" + flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

void add_pipeline_flags(CLI::App* app, FlagSet& flags) {
  flags.add(app, "filter", "uootf|uotf|otf|kuootf");
  flags.add(app, "omega-s", "tradeoff weight omega_s (default: 0.4, or 0.3 for uotf)");
  flags.add(app, "omega-n", "noise weight omega_n (default: sqrt(1 - omega_s^2))");
  flags.add(app, "kernel", "rbf|linear|polynomial (kuootf)");
  flags.add(app, "delta", "rbf kernel width (default 3)");
  flags.add(app, "degree", "polynomial kernel degree (default 2)");
  flags.add(app, "offset", "polynomial kernel offset (default 1)");
  flags.add(app, "noise", "white|ridge|explicit");
  flags.add(app, "lambda", "ridge strength (default 1)");
  flags.add(app, "pca-dims", "PCA dimensionality, 0 = N-1");
  flags.add(app, "pca-center", "true|false");
  flags.add(app, "metric", "euclidean|cosine");
  flags.add(app, "seed", "master seed (default 42)");
  flags.add(app, "threads", "worker threads, 0 = all cores");
  flags.add(app, "otf-policy", "least_squares|strict");
}

const std::set<std::string> kPipelineKeys = {"filter", "omega_s", "omega_n", "kernel",   "delta",
                                             "degree", "offset",  "noise",   "lambda",   "pca_dims",
                                             "pca_center", "metric", "seed", "threads", "otf_policy"};

// Merges the optional config file with command-line flags. `extra` lists the
// subcommand's own keys accepted besides the pipeline settings.
KeyValues resolve(const std::string& config_path, const FlagSet& flags, const std::set<std::string>& extra = {}) {
  KeyValues kv;
  if (!config_path.empty()) kv = KeyValues::load(config_path);
  for (const auto& [k, v] : flags.values) kv.set(k, v);
  for (const auto& [k, v] : kv.entries()) {
    if (!kPipelineKeys.contains(k) && !extra.contains(k)) throw ValidationError("unknown config key: " + k);
  }
  return kv;
}

pipeline::PipelineConfig pipeline_config(const KeyValues& kv) {
  KeyValues subset;
  for (const auto& [k, v] : kv.entries()) {
    if (kPipelineKeys.contains(k)) subset.set(k, v);
  }
  return pipeline::PipelineConfig::from_key_values(subset);
}

data::SplitSpec split_spec(const KeyValues& kv) {
  data::SplitSpec s;
  s.m = kv.get_int("m", s.m);
  s.repetitions = kv.get_int("reps", s.repetitions);
  s.rng_seed = kv.get_u64("seed", s.rng_seed);
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

// "0.1,0.2,0.3" or "start:stop:step" (inclusive).
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    double a = 0, b = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || b < a) {
      throw ValidationError("grid range must be start:stop:step with step > 0");
    }
    const auto n = static_cast<int>(std::floor((b - a) / step + 1e-9));
    for (int i = 0; i <= n; ++i) grid.push_back(a + i * step);
    return grid;
  }
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError("invalid grid value: '" + tok + "'");
    }
  }
  if (grid.empty()) throw ValidationError("empty grid");
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-dependence feature analysis with unconstrained origin tradeoff filters"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset CSV");
  std::string synth_preset_name = "separable", synth_out;
  data::SyntheticSpec sspec;
  std::map<std::string, std::string> synth_overrides;
  synth->add_option("--preset", synth_preset_name, "separable|warped");
  synth->add_option_function<int>("--classes", [&](int v) { synth_overrides["classes"] = std::to_string(v); }, "L");
  synth->add_option_function<int>("--dim", [&](int v) { synth_overrides["dim"] = std::to_string(v); });
  synth->add_option_function<int>("--per-class", [&](int v) { synth_overrides["per_class"] = std::to_string(v); });
  synth->add_option_function<double>("--cluster-spread",
                                     [&](double v) { synth_overrides["cluster_spread"] = format_double(v); });
  synth->add_option_function<double>("--between-spread",
                                     [&](double v) { synth_overrides["between_spread"] = format_double(v); });
  synth->add_option_function<std::string>("--warp", [&](const std::string& v) { synth_overrides["warp"] = v; },
                                          "none|quadratic");
  synth->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { synth_overrides["seed"] = std::to_string(v); });
  synth->add_option("--out", synth_out, "dataset CSV (a .spec sidecar is written next to it)")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a manifest and extract features to CSV");
  std::string manifest_path, ingest_out, feature_kind = "pixel";
  int side = 64;
  features::GaborSpec gspec;
  ingest->add_option("--manifest", manifest_path)->required();
  ingest->add_option("--features", feature_kind, "pixel|gabor");
  ingest->add_option("--side", side, "crop side after resizing (default 64)");
  ingest->add_option("--scales", gspec.scales);
  ingest->add_option("--orientations", gspec.orientations);
  ingest->add_option("--downsample", gspec.downsample);
  ingest->add_option("--out", ingest_out)->required();

  // train
  auto* train = app.add_subcommand("train", "train a model bundle on a feature CSV");
  std::string train_data, train_out, train_config;
  FlagSet train_flags;
  train->add_option("--data", train_data, "feature CSV (class_id,f0,...)")->required();
  train->add_option("--config", train_config, "key=value config file");
  train->add_option("--out", train_out, "model bundle path")->required();
  add_pipeline_flags(train, train_flags);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "repeated random-split evaluation");
  std::string eval_data, eval_out, eval_config;
  FlagSet eval_flags;
  evaluate->add_option("--data", eval_data)->required();
  evaluate->add_option("--config", eval_config);
  evaluate->add_option("--out", eval_out, "results CSV (default stdout)");
  eval_flags.add(evaluate, "m", "training images per class");
  eval_flags.add(evaluate, "reps", "repetitions (default 20)");
  add_pipeline_flags(evaluate, eval_flags);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "evaluate over a parameter grid");
  std::string sweep_data, sweep_out, sweep_config;
  FlagSet sweep_flags;
  sweep->add_option("--data", sweep_data)->required();
  sweep->add_option("--config", sweep_config);
  sweep->add_option("--out", sweep_out, "sweep CSV (default stdout)");
  sweep_flags.add(sweep, "m", "training images per class");
  sweep_flags.add(sweep, "reps", "repetitions (default 20)");
  sweep_flags.add(sweep, "param", "omega-s|delta");
  sweep_flags.add(sweep, "grid", "comma list or start:stop:step");
  add_pipeline_flags(sweep, sweep_flags);

  // oco
  auto* oco = app.add_subcommand("oco", "normalized origin correlation outputs for one probe");
  std::string oco_model, oco_probe, oco_out;
  std::size_t oco_row = 0;
  oco->add_option("--model", oco_model)->required();
  oco->add_option("--probe", oco_probe, "feature CSV holding the probe")->required();
  oco->add_option("--row", oco_row, "probe row in the CSV (default 0)");
  oco->add_option("--out", oco_out, "CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (synth->parsed()) {
      KeyValues kv;
      const auto base = data::synthetic_preset(synth_preset_name);
      kv.set("classes", base.classes);
      kv.set("dim", base.dim);
      kv.set("per_class", base.per_class);
      kv.set("cluster_spread", base.cluster_spread);
      kv.set("between_spread", base.between_spread);
      kv.set("warp", data::to_string(base.warp));
      kv.set("seed", base.rng_seed);
      for (const auto& [k, v] : synth_overrides) kv.set(k, v);
      const std::string spec_path = synth_out + ".spec";
      kv.save(spec_path);
      sspec = data::read_synthetic_spec(spec_path);
      const auto samples = data::generate_synthetic(sspec);
      data::write_samples_csv(samples, synth_out);
      std::cerr << "wrote " << samples.size() << " samples (" << sspec.classes << " classes) to " << synth_out << '\n';
    } else if (ingest->parsed()) {
      const auto manifest = data::load_manifest(manifest_path);
      SampleSet samples;
      std::optional<features::GaborBank> bank;
      if (feature_kind == "gabor") {
        bank.emplace(gspec, side);
      } else if (feature_kind != "pixel") {
        throw ValidationError("unknown feature type: " + feature_kind);
      }
      for (const auto& e : manifest.entries) {
        const auto img = data::preprocess(data::load_image(e.path), side);
        RealVector v = bank ? bank->extract(img) : features::intensity_feature(img);
        samples.push_back({std::move(v), e.class_id, e.path.string()});
      }
      data::write_samples_csv(samples, ingest_out);
      std::cerr << "wrote " << samples.size() << " " << feature_kind << " feature vectors (" << manifest.class_count
                << " classes) to " << ingest_out << '\n';
    } else if (train->parsed()) {
      const auto config = pipeline_config(resolve(train_config, train_flags));
      const auto samples = data::read_samples_csv(train_data);
      const auto bundle = pipeline::train(samples, config);
      pipeline::save_model(bundle, train_out);
      std::cerr << "trained " << pipeline::to_string(config.method) << " on " << samples.size() << " samples, p = "
                << bundle.pca.p() << ", L = " << bundle.class_count() << '\n';
    } else if (evaluate->parsed()) {
      const auto kv = resolve(eval_config, eval_flags, {"m", "reps"});
      const auto report = pipeline::evaluate(data::read_samples_csv(eval_data), split_spec(kv), pipeline_config(kv));
      write_text(eval_out, pipeline::results_csv(report));
    } else if (sweep->parsed()) {
      const auto kv = resolve(sweep_config, sweep_flags, {"m", "reps", "param", "grid"});
      if (!kv.contains("param") || !kv.contains("grid")) throw ValidationError("sweep needs --param and --grid");
      const auto report =
          pipeline::sweep(data::read_samples_csv(sweep_data), split_spec(kv), pipeline_config(kv),
                          pipeline::parse_sweep_param(kv.get_string("param", "")), parse_grid(kv.get_string("grid", "")));
      write_text(sweep_out, pipeline::sweep_csv(report));
      std::cerr << "best " << report.sweep_param << " = " << format_double(*report.best_value)
                << ", mean accuracy " << format_double(report.mean_accuracy) << '\n';
    } else if (oco->parsed()) {
      const auto bundle = pipeline::load_model(oco_model);
      const auto probes = data::read_samples_csv(oco_probe);
      if (oco_row >= probes.size()) throw ValidationError("--row is past the end of the probe CSV");
      write_text(oco_out, pipeline::oco_csv(pipeline::oco_dump(bundle, probes[oco_row].vector)));
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
