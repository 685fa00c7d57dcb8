#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfa/sample.hpp"

namespace cfa::data {

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest's directory
  ClassId class_id = 0;
  std::string session;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int class_count = 0;
  std::string notes;

  std::vector<ClassId> labels() const;
};

/// Parses a `path,class_id,session` CSV. Class ids must be exactly 0..L-1.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});

struct SplitSpec {
  int m = 3;                   // training samples per class
  int repetitions = 20;
  std::uint64_t rng_seed = 42;
};

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Draws m training indices per class (partial Fisher-Yates per class, in
/// class order) from a generator seeded with derive_seed(seed, split, rep).
/// Every class needs at least m + 1 members.
Split sample_split(std::span<const ClassId> labels, const SplitSpec& spec, int rep_index);

enum class Warp { none, quadratic };

struct SyntheticSpec {
  int classes = 20;  // L
  int dim = 64;
  int per_class = 6;
  double cluster_spread = 2.5;
  double between_spread = 1.0;
  Warp warp = Warp::none;
  std::uint64_t rng_seed = 42;
};

void validate(const SyntheticSpec& spec);

/// Class centres ~ N(0, between_spread^2 I). Each sample adds within-class
/// noise whose coordinate j has standard deviation
/// cluster_spread * sqrt(w_j), w_j ~ 1/(j+1)^2 normalised to mean 1.
/// Warp::quadratic multiplies every sample by an independent random sign, so
/// class means vanish and only the quadratic statistics x x^T carry the class.
/// Samples are ordered by class, then index; source ids are "c<label>_<k>".
SampleSet generate_synthetic(const SyntheticSpec& spec);

/// Named benchmark configurations: "separable" (the defaults above) and
/// "warped" (sign-folded tight clusters around nearby centers).
SyntheticSpec synthetic_preset(const std::string& name);

/// `class_id,f0,f1,...` CSV with a header row. Values use %.17g.
void write_samples_csv(const SampleSet& samples, const std::filesystem::path& path);
SampleSet read_samples_csv(const std::filesystem::path& path);

/// Sidecar `key=value` echo of a SyntheticSpec.
void write_synthetic_spec(const SyntheticSpec& spec, const std::filesystem::path& path);
SyntheticSpec read_synthetic_spec(const std::filesystem::path& path);

std::string to_string(Warp w);
Warp parse_warp(const std::string& s);

}  // namespace cfa::data
