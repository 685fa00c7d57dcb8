#include "cfa/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cfa/config.hpp"
#include "cfa/error.hpp"
#include "cfa/rng.hpp"

namespace cfa {

int class_count(const SampleSet& samples) {
  int L = 0;
  for (const auto& s : samples) {
    if (s.label < 0) throw ValidationError("negative class label in sample " + s.source_id);
    L = std::max(L, s.label + 1);
  }
  return L;
}

void validate_samples(const SampleSet& samples) {
  if (samples.empty()) throw ValidationError("empty sample set");
  const auto len = samples.front().vector.size();
  for (const auto& s : samples) {
    if (s.vector.size() != len) throw ValidationError("sample " + s.source_id + " has mismatched length");
    if (!s.vector.allFinite()) throw ValidationError("sample " + s.source_id + " has non-finite entries");
  }
  class_count(samples);
}

}  // namespace cfa

namespace cfa::data {

std::vector<ClassId> DatasetManifest::labels() const {
  std::vector<ClassId> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.class_id);
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_nonneg_int(const std::string& s, int& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && ptr == e && out >= 0;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && ptr == e;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("malformed row: empty manifest");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (trim(line) != "path,class_id,session") {
    throw ValidationError("malformed row: manifest header must be 'path,class_id,session'");
  }
  DatasetManifest m;
  std::set<std::string> seen;
  std::set<ClassId> ids;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(trim(line));
    int cls = -1;
    if (cells.size() != 3 || trim(cells[0]).empty() || !parse_nonneg_int(trim(cells[1]), cls)) {
      throw ValidationError("malformed row " + std::to_string(row) + ": " + line);
    }
    std::filesystem::path p = trim(cells[0]);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    if (!seen.insert(p.lexically_normal().string()).second) {
      throw ValidationError("duplicate path at row " + std::to_string(row) + ": " + p.string());
    }
    ids.insert(cls);
    m.entries.push_back({p, cls, trim(cells[2])});
  }
  if (m.entries.empty()) throw ValidationError("empty class: manifest has no entries");
  m.class_count = static_cast<int>(ids.size());
  if (*ids.rbegin() != m.class_count - 1) {
    for (int c = 0; c < m.class_count; ++c) {
      if (!ids.contains(c)) throw ValidationError("empty class: no entries for class " + std::to_string(c));
    }
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing manifest: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

Split sample_split(std::span<const ClassId> labels, const SplitSpec& spec, int rep_index) {
  if (spec.m < 1) throw ValidationError("split: m must be >= 1");
  if (spec.repetitions < 1) throw ValidationError("split: repetitions must be >= 1");
  if (rep_index < 0 || rep_index >= spec.repetitions) {
    throw ValidationError("split: rep_index out of range");
  }
  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [cls, idx] : by_class) {
    if (static_cast<int>(idx.size()) < spec.m + 1) {
      throw ValidationError("split infeasible: class " + std::to_string(cls) + " has " +
                            std::to_string(idx.size()) + " entries, needs m+1 = " +
                            std::to_string(spec.m + 1));
    }
  }
  Rng rng(derive_seed(spec.rng_seed, kSplitStream, static_cast<std::uint64_t>(rep_index)));
  Split split;
  for (auto& [cls, idx] : by_class) {
    for (int k = 0; k < spec.m; ++k) {
      const auto j = k + rng.uniform_index(idx.size() - k);
      std::swap(idx[k], idx[j]);
    }
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + spec.m);
    split.test.insert(split.test.end(), idx.begin() + spec.m, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void validate(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ValidationError("synthetic: L must be >= 2");
  if (spec.per_class < 2) throw ValidationError("synthetic: per_class must be >= 2");
  if (spec.dim < 1) throw ValidationError("synthetic: dim must be >= 1");
  if (!(spec.cluster_spread >= 0) || !(spec.between_spread >= 0)) {
    throw ValidationError("synthetic: spreads must be nonnegative");
  }
}

SyntheticSpec synthetic_preset(const std::string& name) {
  SyntheticSpec s;
  if (name == "separable") return s;
  if (name == "warped") {
    s.between_spread = 0.05;
    s.cluster_spread = 0.025;
    s.warp = Warp::quadratic;
    return s;
  }
  throw ValidationError("unknown synthetic preset: " + name + " (expected separable|warped)");
}

SampleSet generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.rng_seed, kSynthStream, 0));
  RealVector scale(spec.dim);
  for (int j = 0; j < spec.dim; ++j) scale[j] = 1.0 / ((j + 1.0) * (j + 1.0));
  scale *= spec.dim / scale.sum();
  scale = scale.cwiseSqrt() * spec.cluster_spread;

  std::vector<RealVector> centers(spec.classes, RealVector(spec.dim));
  for (auto& c : centers) {
    for (int j = 0; j < spec.dim; ++j) c[j] = spec.between_spread * rng.normal();
  }
  SampleSet out;
  out.reserve(static_cast<std::size_t>(spec.classes) * spec.per_class);
  for (int c = 0; c < spec.classes; ++c) {
    for (int k = 0; k < spec.per_class; ++k) {
      RealVector x(spec.dim);
      for (int j = 0; j < spec.dim; ++j) x[j] = centers[c][j] + scale[j] * rng.normal();
      if (spec.warp == Warp::quadratic) x *= rng.sign();
      out.push_back({std::move(x), c, "c" + std::to_string(c) + "_" + std::to_string(k)});
    }
  }
  return out;
}

void write_samples_csv(const SampleSet& samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  const auto dim = samples.empty() ? 0 : samples.front().vector.size();
  out << "class_id";
  for (Eigen::Index j = 0; j < dim; ++j) out << ",f" << j;
  out << '\n';
  char buf[32];
  for (const auto& s : samples) {
    if (s.vector.size() != dim) throw ValidationError("write_samples_csv: ragged sample set");
    out << s.label;
    for (Eigen::Index j = 0; j < dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", s.vector[j]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

SampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing feature CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line).rfind("class_id", 0) != 0) {
    throw ValidationError("feature CSV must start with a class_id header: " + path.string());
  }
  const auto width = split_csv_line(trim(line)).size();
  SampleSet out;
  int row = 1;
  std::map<int, int> per_class;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(trim(line));
    int cls = -1;
    if (cells.size() != width || !parse_nonneg_int(trim(cells[0]), cls)) {
      throw ValidationError("malformed row " + std::to_string(row) + " in " + path.string());
    }
    RealVector v(static_cast<Eigen::Index>(width - 1));
    for (std::size_t j = 1; j < width; ++j) {
      if (!parse_double(trim(cells[j]), v[static_cast<Eigen::Index>(j - 1)])) {
        throw ValidationError("malformed value at row " + std::to_string(row) + " in " + path.string());
      }
    }
    const int k = per_class[cls]++;
    out.push_back({std::move(v), cls, "c" + std::to_string(cls) + "_" + std::to_string(k)});
  }
  validate_samples(out);
  return out;
}

std::string to_string(Warp w) { return w == Warp::quadratic ? "quadratic" : "none"; }

Warp parse_warp(const std::string& s) {
  if (s == "none") return Warp::none;
  if (s == "quadratic") return Warp::quadratic;
  throw ValidationError("unknown warp: " + s);
}

void write_synthetic_spec(const SyntheticSpec& spec, const std::filesystem::path& path) {
  KeyValues kv;
  kv.set("classes", spec.classes);
  kv.set("dim", spec.dim);
  kv.set("per_class", spec.per_class);
  kv.set("cluster_spread", spec.cluster_spread);
  kv.set("between_spread", spec.between_spread);
  kv.set("warp", to_string(spec.warp));
  kv.set("seed", spec.rng_seed);
  kv.save(path);
}

SyntheticSpec read_synthetic_spec(const std::filesystem::path& path) {
  const auto kv = KeyValues::load(path);
  SyntheticSpec s;
  s.classes = kv.get_int("classes", s.classes);
  s.dim = kv.get_int("dim", s.dim);
  s.per_class = kv.get_int("per_class", s.per_class);
  s.cluster_spread = kv.get_double("cluster_spread", s.cluster_spread);
  s.between_spread = kv.get_double("between_spread", s.between_spread);
  s.warp = parse_warp(kv.get_string("warp", to_string(s.warp)));
  s.rng_seed = kv.get_u64("seed", s.rng_seed);
  validate(s);
  return s;
}

}  // namespace cfa::data
