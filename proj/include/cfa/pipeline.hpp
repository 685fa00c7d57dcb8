#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cfa/config.hpp"
#include "cfa/data.hpp"
#include "cfa/filterbank.hpp"
#include "cfa/kernelcfa.hpp"
#include "cfa/sample.hpp"
#include "cfa/subspace.hpp"

namespace cfa::pipeline {

enum class Method { uootf, uotf, otf, kuootf };
enum class NoiseSetting { white, ridge, explicit_ };
enum class Metric { euclidean, cosine };

std::string to_string(Method m);
std::string to_string(NoiseSetting n);
std::string to_string(Metric m);
Method parse_method(const std::string& s);
NoiseSetting parse_noise(const std::string& s);
Metric parse_metric(const std::string& s);

/// Fully resolved training/evaluation configuration. Every field has a
/// `key=value` spelling (see to_key_values) mirrored by a CLI flag.
struct PipelineConfig {
  Method method = Method::uootf;
  std::optional<double> omega_s;  // unset: preset for the method
  std::optional<double> omega_n;  // unset: sqrt(1 - omega_s^2)
  kernel::KernelSpec kernel;
  NoiseSetting noise = NoiseSetting::white;  // linear: white|ridge|explicit, kernel: ridge|explicit
  double ridge_lambda = 1.0;
  bool pca_center = true;
  int pca_dims = 0;  // 0 = auto, N - 1 capped by rank
  Metric metric = Metric::euclidean;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  filters::ConstraintPolicy otf_policy = filters::ConstraintPolicy::least_squares;

  filters::TradeoffParams tradeoff() const;
  KeyValues to_key_values() const;
  /// Unknown keys are rejected. Missing keys keep their defaults.
  static PipelineConfig from_key_values(const KeyValues& kv);
};

struct ModelBundle {
  static constexpr std::uint32_t kFormatVersion = 1;

  subspace::PcaModel pca;
  std::variant<filters::FilterBank, kernel::KernelBank> bank;
  PipelineConfig config;
  RealMatrix gallery;  // N x L normalized training features
  std::vector<ClassId> gallery_labels;
  std::vector<std::uint8_t> gallery_degenerate;
  std::uint32_t format_version = kFormatVersion;

  int class_count() const;
  bool is_kernel() const { return std::holds_alternative<kernel::KernelBank>(bank); }
};

/// PCA -> DFT -> per-class statistics -> filter bank (or kernel bank) ->
/// normalized training feature gallery.
ModelBundle train(const SampleSet& samples, const PipelineConfig& config);

/// Spectrum of a raw input vector under the bundle's PCA model.
spectral::Spectrum to_spectrum(const ModelBundle& bundle, const RealVector& x, ClassId label = 0);

/// Raw (unnormalized) CFA feature of a spectrum.
RealVector raw_feature(const ModelBundle& bundle, const ComplexVector& Y);

struct Classification {
  ClassId predicted = -1;
  std::size_t nearest = 0;    // gallery row
  RealVector feature;         // normalized
  RealVector distances;       // to every gallery row
  bool degenerate = false;
};

/// Nearest neighbour over the normalized gallery; ties go to the lowest row.
Classification classify(const ModelBundle& bundle, const RealVector& probe);

struct OcoRow {
  ClassId class_id;
  double value;
};

struct OcoDump {
  std::vector<OcoRow> rows;
  bool degenerate = false;
};

/// Normalized origin correlation output per class.
OcoDump oco_dump(const ModelBundle& bundle, const RealVector& probe);

struct SweepPoint {
  double value = 0.0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
};

struct StageTiming {
  double pca = 0.0;
  double filters = 0.0;
  double classify = 0.0;
};

struct RunReport {
  std::vector<double> per_rep_accuracy;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation, 0 for one repetition
  std::vector<std::vector<long>> confusion;  // [true][predicted], pooled
  std::vector<SweepPoint> sweep_grid;
  std::string sweep_param;
  std::optional<double> best_value;
  StageTiming timing;            // summed over repetitions
  long degenerate_count = 0;     // flagged normalizations over all probes
  int feature_dim = 0;           // L
  std::vector<int> pca_dims;     // p per repetition

  /// Accuracy-only summary for comparisons; excludes timing.
  bool same_results(const RunReport& other) const;
};

/// Repeated random-split evaluation. Repetitions run concurrently and are
/// merged in index order.
RunReport evaluate(const SampleSet& dataset, const data::SplitSpec& split, const PipelineConfig& config);

enum class SweepParam { omega_s, rbf_delta };
std::string to_string(SweepParam p);
SweepParam parse_sweep_param(const std::string& s);

/// One evaluate() per grid value on identical splits. The top-level fields
/// of the returned report are those of the best grid value (first on ties).
RunReport sweep(const SampleSet& dataset, const data::SplitSpec& split, const PipelineConfig& base, SweepParam param,
                const std::vector<double>& grid);

/// `rep,accuracy` rows then a `# key=value` summary block.
std::string results_csv(const RunReport& report);
/// `param_value,mean_accuracy,std_accuracy`.
std::string sweep_csv(const RunReport& report);
/// `class_id,normalized_oco`.
std::string oco_csv(const OcoDump& dump);

std::vector<std::uint8_t> serialize(const ModelBundle& bundle);
ModelBundle deserialize(const std::vector<std::uint8_t>& bytes);
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace cfa::pipeline
