#include "cfa/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "cfa/error.hpp"
#include "cfa/parallel.hpp"
#include "cfa/rng.hpp"

namespace cfa::pipeline {

std::string to_string(Method m) {
  switch (m) {
    case Method::uootf: return "uootf";
    case Method::uotf: return "uotf";
    case Method::otf: return "otf";
    case Method::kuootf: return "kuootf";
  }
  return "?";
}

std::string to_string(NoiseSetting n) {
  switch (n) {
    case NoiseSetting::white: return "white";
    case NoiseSetting::ridge: return "ridge";
    case NoiseSetting::explicit_: return "explicit";
  }
  return "?";
}

std::string to_string(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

Method parse_method(const std::string& s) {
  if (s == "uootf") return Method::uootf;
  if (s == "uotf") return Method::uotf;
  if (s == "otf") return Method::otf;
  if (s == "kuootf") return Method::kuootf;
  throw ValidationError("unknown filter: " + s + " (expected uootf|uotf|otf|kuootf)");
}

NoiseSetting parse_noise(const std::string& s) {
  if (s == "white") return NoiseSetting::white;
  if (s == "ridge") return NoiseSetting::ridge;
  if (s == "explicit") return NoiseSetting::explicit_;
  throw ValidationError("unknown noise model: " + s + " (expected white|ridge|explicit)");
}

Metric parse_metric(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  throw ValidationError("unknown metric: " + s);
}

std::string to_string(SweepParam p) { return p == SweepParam::omega_s ? "omega-s" : "delta"; }

SweepParam parse_sweep_param(const std::string& s) {
  if (s == "omega-s" || s == "omega_s") return SweepParam::omega_s;
  if (s == "delta" || s == "rbf_delta") return SweepParam::rbf_delta;
  throw ValidationError("unknown sweep parameter: " + s + " (expected omega-s|delta)");
}

filters::TradeoffParams PipelineConfig::tradeoff() const {
  const double ws = omega_s.value_or(method == Method::uotf ? filters::kPresetOmegaSUotf : filters::kPresetOmegaS);
  auto params = filters::TradeoffParams::coupled(ws);
  if (omega_n) params.omega_n = *omega_n;
  filters::validate(params);
  return params;
}

KeyValues PipelineConfig::to_key_values() const {
  KeyValues kv;
  kv.set("filter", to_string(method));
  const auto params = tradeoff();
  kv.set("omega_s", params.omega_s);
  kv.set("omega_n", params.omega_n);
  kv.set("kernel", kernel::to_string(kernel.kind));
  kv.set("delta", kernel.delta);
  kv.set("degree", kernel.degree);
  kv.set("offset", kernel.offset);
  kv.set("noise", to_string(noise));
  kv.set("lambda", ridge_lambda);
  kv.set("pca_center", pca_center);
  kv.set("pca_dims", pca_dims);
  kv.set("metric", to_string(metric));
  kv.set("seed", seed);
  kv.set("otf_policy", otf_policy == filters::ConstraintPolicy::strict ? "strict" : "least_squares");
  return kv;
}

PipelineConfig PipelineConfig::from_key_values(const KeyValues& kv) {
  static const std::set<std::string> known = {"filter", "omega_s", "omega_n", "kernel",   "delta",
                                              "degree", "offset",  "noise",   "lambda",   "pca_center",
                                              "pca_dims", "metric", "seed",   "threads",  "otf_policy"};
  for (const auto& [k, v] : kv.entries()) {
    if (!known.contains(k)) throw ValidationError("unknown config key: " + k);
  }
  PipelineConfig c;
  c.method = parse_method(kv.get_string("filter", to_string(c.method)));
  if (kv.contains("omega_s")) c.omega_s = kv.get_double("omega_s", 0.0);
  if (kv.contains("omega_n")) c.omega_n = kv.get_double("omega_n", 0.0);
  c.kernel.kind = kernel::parse_kernel_kind(kv.get_string("kernel", kernel::to_string(c.kernel.kind)));
  c.kernel.delta = kv.get_double("delta", c.kernel.delta);
  c.kernel.degree = kv.get_int("degree", c.kernel.degree);
  c.kernel.offset = kv.get_double("offset", c.kernel.offset);
  c.noise = parse_noise(kv.get_string("noise", to_string(c.noise)));
  c.ridge_lambda = kv.get_double("lambda", c.ridge_lambda);
  c.pca_center = kv.get_bool("pca_center", c.pca_center);
  c.pca_dims = kv.get_int("pca_dims", c.pca_dims);
  c.metric = parse_metric(kv.get_string("metric", to_string(c.metric)));
  c.seed = kv.get_u64("seed", c.seed);
  c.threads = static_cast<unsigned>(kv.get_int("threads", 0));
  const auto policy = kv.get_string("otf_policy", "least_squares");
  if (policy == "strict") {
    c.otf_policy = filters::ConstraintPolicy::strict;
  } else if (policy == "least_squares") {
    c.otf_policy = filters::ConstraintPolicy::least_squares;
  } else {
    throw ValidationError("unknown otf_policy: " + policy);
  }
  kernel::validate(c.kernel);
  c.tradeoff();
  return c;
}

int ModelBundle::class_count() const {
  return std::visit([](const auto& b) { return b.class_count(); }, bank);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ComplexMatrix linear_noise(const PipelineConfig& config, int p, int n) {
  switch (config.noise) {
    case NoiseSetting::white:
      return ComplexMatrix::Identity(p, p);
    case NoiseSetting::ridge:
      if (!(config.ridge_lambda > 0)) throw ValidationError("ridge lambda must be > 0");
      return config.ridge_lambda * ComplexMatrix::Identity(p, p);
    case NoiseSetting::explicit_: {
      spectral::NoiseModel model;
      model.kind = spectral::NoiseKind::explicit_samples;
      model.rng_seed = derive_seed(config.seed, kNoiseStream, 0xC0FFEE);
      model.samples = spectral::white_noise_spectra(n, p, model.rng_seed);
      return spectral::noise_covariance(model, p);
    }
  }
  throw ValidationError("unknown noise setting");
}

kernel::NoiseMode kernel_noise(const PipelineConfig& config) {
  kernel::NoiseMode mode;
  mode.kind = config.noise == NoiseSetting::explicit_ ? kernel::NoiseKind::explicit_ : kernel::NoiseKind::ridge;
  mode.lambda = config.ridge_lambda;
  mode.seed = config.seed;
  return mode;
}

filters::FilterKind linear_kind(Method m) {
  switch (m) {
    case Method::uootf: return filters::FilterKind::uootf;
    case Method::uotf: return filters::FilterKind::uotf;
    case Method::otf: return filters::FilterKind::otf;
    case Method::kuootf: break;
  }
  throw ValidationError("kuootf is not a linear filter");
}

ModelBundle train_impl(const SampleSet& samples, const PipelineConfig& config, StageTiming* timing) {
  validate_samples(samples);
  const int L = class_count(samples);
  if (L < 2) throw ValidationError("train: need at least 2 classes");
  std::vector<int> counts(static_cast<std::size_t>(L), 0);
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.label)];
  for (int c = 0; c < L; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw ValidationError("train: class " + std::to_string(c) + " has no samples");
    }
  }

  ModelBundle bundle;
  bundle.config = config;
  const auto params = config.tradeoff();

  auto t0 = Clock::now();
  subspace::PcaOptions popt;
  popt.center = config.pca_center;
  if (config.pca_dims > 0) popt.p = config.pca_dims;
  try {
    bundle.pca = subspace::pca_fit(samples, popt);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("train [pca]: ") + e.what());
  }
  std::vector<spectral::Spectrum> spectra;
  spectra.reserve(samples.size());
  for (const auto& s : samples) {
    spectra.push_back(spectral::dft(subspace::pca_project(bundle.pca, s.vector), s.label, s.source_id));
  }
  if (timing) timing->pca += seconds_since(t0);

  t0 = Clock::now();
  try {
    if (config.method == Method::kuootf) {
      bundle.bank = kernel::build_kernel_bank(spectra, config.kernel, kernel_noise(config), params, config.threads);
    } else {
      const int p = static_cast<int>(bundle.pca.p());
      const ComplexMatrix C = linear_noise(config, p, static_cast<int>(spectra.size()));
      filters::BankOptions bopt;
      bopt.otf_policy = config.otf_policy;
      bopt.threads = config.threads;
      bundle.bank = filters::build_bank(spectra, linear_kind(config.method), C, params, bopt);
    }
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("train [filters]: ") + e.what(), e.rcond());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("train [filters]: ") + e.what());
  }
  if (timing) timing->filters += seconds_since(t0);

  const auto n = static_cast<Eigen::Index>(samples.size());
  bundle.gallery.resize(n, L);
  bundle.gallery_labels.resize(samples.size());
  bundle.gallery_degenerate.resize(samples.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto nf = filters::normalize_feature(raw_feature(bundle, spectra[static_cast<std::size_t>(i)].values));
    bundle.gallery.row(i) = nf.values.transpose();
    bundle.gallery_labels[static_cast<std::size_t>(i)] = samples[static_cast<std::size_t>(i)].label;
    bundle.gallery_degenerate[static_cast<std::size_t>(i)] = nf.degenerate ? 1 : 0;
  }
  return bundle;
}

}  // namespace

ModelBundle train(const SampleSet& samples, const PipelineConfig& config) {
  return train_impl(samples, config, nullptr);
}

spectral::Spectrum to_spectrum(const ModelBundle& bundle, const RealVector& x, ClassId label) {
  return spectral::dft(subspace::pca_project(bundle.pca, x), label);
}

RealVector raw_feature(const ModelBundle& bundle, const ComplexVector& Y) {
  if (const auto* kb = std::get_if<kernel::KernelBank>(&bundle.bank)) return kernel::kernel_feature(*kb, Y);
  return filters::extract_feature(std::get<filters::FilterBank>(bundle.bank), Y);
}

Classification classify(const ModelBundle& bundle, const RealVector& probe) {
  const auto Y = to_spectrum(bundle, probe);
  const auto nf = filters::normalize_feature(raw_feature(bundle, Y.values));
  Classification out;
  out.feature = nf.values;
  out.degenerate = nf.degenerate;
  const auto n = bundle.gallery.rows();
  out.distances.resize(n);
  if (bundle.config.metric == Metric::euclidean) {
    out.distances = (bundle.gallery.rowwise() - nf.values.transpose()).rowwise().norm();
  } else {
    const double qn = nf.values.norm();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double gn = bundle.gallery.row(i).norm();
      const double denom = qn * gn;
      out.distances[i] = denom > 0 ? 1.0 - bundle.gallery.row(i).dot(nf.values) / denom : 1.0;
    }
  }
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (out.distances[i] < out.distances[best]) best = i;
  }
  out.nearest = static_cast<std::size_t>(best);
  out.predicted = bundle.gallery_labels[out.nearest];
  return out;
}

OcoDump oco_dump(const ModelBundle& bundle, const RealVector& probe) {
  const auto Y = to_spectrum(bundle, probe);
  const auto nf = filters::normalize_feature(raw_feature(bundle, Y.values));
  OcoDump dump;
  dump.degenerate = nf.degenerate;
  for (Eigen::Index l = 0; l < nf.values.size(); ++l) dump.rows.push_back({static_cast<ClassId>(l), nf.values[l]});
  return dump;
}

bool RunReport::same_results(const RunReport& o) const {
  if (per_rep_accuracy != o.per_rep_accuracy || confusion != o.confusion || degenerate_count != o.degenerate_count ||
      pca_dims != o.pca_dims || best_value != o.best_value || sweep_grid.size() != o.sweep_grid.size()) {
    return false;
  }
  for (std::size_t i = 0; i < sweep_grid.size(); ++i) {
    if (sweep_grid[i].value != o.sweep_grid[i].value || sweep_grid[i].mean_accuracy != o.sweep_grid[i].mean_accuracy ||
        sweep_grid[i].std_accuracy != o.sweep_grid[i].std_accuracy) {
      return false;
    }
  }
  return mean_accuracy == o.mean_accuracy && std_accuracy == o.std_accuracy;
}

namespace {

struct RepResult {
  double accuracy = 0.0;
  std::vector<std::vector<long>> confusion;
  StageTiming timing;
  long degenerate = 0;
  int p = 0;
};

SampleSet subset(const SampleSet& all, const std::vector<std::size_t>& idx) {
  SampleSet out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

RunReport evaluate(const SampleSet& dataset, const data::SplitSpec& split, const PipelineConfig& config) {
  validate_samples(dataset);
  const int L = class_count(dataset);
  std::vector<ClassId> labels;
  labels.reserve(dataset.size());
  for (const auto& s : dataset) labels.push_back(s.label);
  // Surface infeasible splits before spawning work.
  data::sample_split(labels, split, 0);

  const auto reps = static_cast<std::size_t>(split.repetitions);
  std::vector<RepResult> results(reps);
  PipelineConfig inner = config;
  inner.threads = 1;
  parallel_for(
      reps,
      [&](std::size_t r) {
        const auto sp = data::sample_split(labels, split, static_cast<int>(r));
        RepResult& res = results[r];
        res.confusion.assign(static_cast<std::size_t>(L), std::vector<long>(static_cast<std::size_t>(L), 0));
        const auto bundle = train_impl(subset(dataset, sp.train), inner, &res.timing);
        res.p = static_cast<int>(bundle.pca.p());
        const auto t0 = Clock::now();
        long correct = 0;
        for (auto i : sp.test) {
          const auto c = classify(bundle, dataset[i].vector);
          if (c.degenerate) ++res.degenerate;
          if (c.predicted == dataset[i].label) ++correct;
          ++res.confusion[static_cast<std::size_t>(dataset[i].label)][static_cast<std::size_t>(c.predicted)];
        }
        res.timing.classify += seconds_since(t0);
        res.accuracy = static_cast<double>(correct) / static_cast<double>(sp.test.size());
      },
      config.threads);

  RunReport report;
  report.feature_dim = L;
  report.confusion.assign(static_cast<std::size_t>(L), std::vector<long>(static_cast<std::size_t>(L), 0));
  for (const auto& res : results) {
    report.per_rep_accuracy.push_back(res.accuracy);
    report.pca_dims.push_back(res.p);
    report.degenerate_count += res.degenerate;
    report.timing.pca += res.timing.pca;
    report.timing.filters += res.timing.filters;
    report.timing.classify += res.timing.classify;
    for (int a = 0; a < L; ++a) {
      for (int b = 0; b < L; ++b) {
        report.confusion[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +=
            res.confusion[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      }
    }
  }
  const double n = static_cast<double>(reps);
  report.mean_accuracy = std::accumulate(report.per_rep_accuracy.begin(), report.per_rep_accuracy.end(), 0.0) / n;
  if (reps > 1) {
    double ss = 0.0;
    for (double a : report.per_rep_accuracy) ss += (a - report.mean_accuracy) * (a - report.mean_accuracy);
    report.std_accuracy = std::sqrt(ss / (n - 1.0));
  }
  return report;
}

RunReport sweep(const SampleSet& dataset, const data::SplitSpec& split, const PipelineConfig& base, SweepParam param,
                const std::vector<double>& grid) {
  if (grid.empty()) throw ValidationError("sweep: empty grid");
  if (param == SweepParam::rbf_delta &&
      (base.method != Method::kuootf || base.kernel.kind != kernel::KernelKind::rbf)) {
    throw ValidationError("sweep: delta requires --filter kuootf with the rbf kernel");
  }
  std::vector<PipelineConfig> configs;
  for (double v : grid) {
    PipelineConfig c = base;
    if (param == SweepParam::omega_s) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("sweep: omega_s values must lie in [0, 1]");
      c.omega_s = v;
      c.omega_n.reset();
    } else {
      if (!(v > 0.0)) throw ValidationError("sweep: delta values must be > 0");
      c.kernel.delta = v;
    }
    configs.push_back(c);
  }
  std::optional<RunReport> best;
  std::vector<SweepPoint> points;
  double best_value = grid.front();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto r = evaluate(dataset, split, configs[i]);
    points.push_back({grid[i], r.mean_accuracy, r.std_accuracy});
    if (!best || r.mean_accuracy > best->mean_accuracy) {
      best = std::move(r);
      best_value = grid[i];
    }
  }
  best->sweep_grid = std::move(points);
  best->sweep_param = to_string(param);
  best->best_value = best_value;
  return *best;
}

std::string results_csv(const RunReport& report) {
  std::ostringstream out;
  out << "rep,accuracy\n";
  for (std::size_t r = 0; r < report.per_rep_accuracy.size(); ++r) {
    out << r << ',' << format_double(report.per_rep_accuracy[r]) << '\n';
  }
  out << "# mean_accuracy=" << format_double(report.mean_accuracy) << '\n';
  out << "# std_accuracy=" << format_double(report.std_accuracy) << '\n';
  out << "# repetitions=" << report.per_rep_accuracy.size() << '\n';
  out << "# feature_dim=" << report.feature_dim << '\n';
  out << "# degenerate_normalizations=" << report.degenerate_count << '\n';
  if (report.best_value) out << "# best_" << report.sweep_param << '=' << format_double(*report.best_value) << '\n';
  out << "# seconds_pca=" << format_double(report.timing.pca) << '\n';
  out << "# seconds_filters=" << format_double(report.timing.filters) << '\n';
  out << "# seconds_classify=" << format_double(report.timing.classify) << '\n';
  return out.str();
}

std::string sweep_csv(const RunReport& report) {
  std::ostringstream out;
  out << "param_value,mean_accuracy,std_accuracy\n";
  for (const auto& pt : report.sweep_grid) {
    out << format_double(pt.value) << ',' << format_double(pt.mean_accuracy) << ',' << format_double(pt.std_accuracy)
        << '\n';
  }
  return out.str();
}

std::string oco_csv(const OcoDump& dump) {
  std::ostringstream out;
  out << "class_id,normalized_oco\n";
  for (const auto& r : dump.rows) out << r.class_id << ',' << format_double(r.value) << '\n';
  if (dump.degenerate) out << "# degenerate=true\n";
  return out.str();
}

}  // namespace cfa::pipeline
