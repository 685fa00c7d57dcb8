#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cfa/data.hpp"
#include "cfa/error.hpp"
#include "cfa/pipeline.hpp"
#include "oracles.hpp"

using namespace cfa;
using namespace cfa::pipeline;

namespace {

SampleSet subset(const SampleSet& all, const std::vector<std::size_t>& idx) {
  SampleSet out;
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

struct Benchmark {
  SampleSet all, train, test;
};

Benchmark separable_split(int rep = 0) {
  Benchmark b;
  b.all = data::generate_synthetic(data::SyntheticSpec{});
  std::vector<ClassId> labels;
  for (const auto& s : b.all) labels.push_back(s.label);
  const auto split = data::sample_split(labels, data::SplitSpec{}, rep);
  b.train = subset(b.all, split.train);
  b.test = subset(b.all, split.test);
  return b;
}

PipelineConfig config_for(Method m) {
  PipelineConfig c;
  c.method = m;
  return c;
}

double accuracy(const ModelBundle& bundle, const SampleSet& test) {
  int hits = 0;
  for (const auto& s : test) hits += classify(bundle, s.vector).predicted == s.label;
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cfa_test_pipeline";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Two concentric spherical shells in 3-D, alternating labels.
SampleSet shells(int per_class, std::uint64_t seed) {
  Rng rng(seed);
  SampleSet out;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    RealVector d(3);
    for (auto& x : d) x = rng.normal();
    d.normalize();
    const double radius = (label == 0 ? 1.0 : 1.5) + 0.02 * rng.normal();
    out.push_back({radius * d, label, "s" + std::to_string(i)});
  }
  return out;
}

// Best half-space on the training set by exhaustive search over a dense
// set of directions and every threshold between projected samples; returns
// held-out accuracy of that separator.
double best_halfspace_accuracy(const SampleSet& train, const SampleSet& test) {
  const int directions = 4000;
  double best_train = -1, best_test = 0;
  for (int k = 0; k < directions; ++k) {
    // Fibonacci sphere.
    const double z = 1 - 2 * (k + 0.5) / directions;
    const double r = std::sqrt(1 - z * z);
    const double phi = k * std::numbers::pi * (3 - std::sqrt(5.0));
    const Eigen::Vector3d w(r * std::cos(phi), r * std::sin(phi), z);
    std::vector<std::pair<double, int>> proj;
    for (const auto& s : train) proj.push_back({w.dot(s.vector), s.label});
    std::sort(proj.begin(), proj.end());
    for (std::size_t cut = 0; cut <= proj.size(); ++cut) {
      const double t = cut == 0 ? proj.front().first - 1
                       : cut == proj.size() ? proj.back().first + 1
                                             : 0.5 * (proj[cut - 1].first + proj[cut].first);
      for (int side : {0, 1}) {
        int hits = 0;
        for (const auto& [v, label] : proj) hits += ((v > t) ? side : 1 - side) == label;
        const double acc = static_cast<double>(hits) / static_cast<double>(proj.size());
        if (acc > best_train) {
          best_train = acc;
          int th = 0;
          for (const auto& s : test) th += ((w.dot(s.vector) > t) ? side : 1 - side) == s.label;
          best_test = static_cast<double>(th) / static_cast<double>(test.size());
        }
      }
    }
  }
  return best_test;
}

}  // namespace

TEST_CASE("config keys round-trip and reject unknown entries") {
  PipelineConfig c;
  c.method = Method::kuootf;
  c.omega_s = 0.25;
  c.kernel.delta = 4.5;
  c.noise = NoiseSetting::explicit_;
  c.metric = Metric::cosine;
  c.seed = 17;
  const auto back = PipelineConfig::from_key_values(c.to_key_values());
  CHECK(back.method == Method::kuootf);
  CHECK(back.tradeoff().omega_s == 0.25);
  CHECK(std::abs(back.tradeoff().omega_n - std::sqrt(1 - 0.0625)) < 1e-12);
  CHECK(back.kernel.delta == 4.5);
  CHECK(back.noise == NoiseSetting::explicit_);
  CHECK(back.metric == Metric::cosine);
  CHECK(back.seed == 17);
  CHECK(back.to_key_values().to_string() == c.to_key_values().to_string());

  KeyValues bad;
  bad.set("omega", 0.3);
  CHECK_THROWS_AS(PipelineConfig::from_key_values(bad), ValidationError);
  KeyValues bad_method;
  bad_method.set("filter", "mace");
  CHECK_THROWS_AS(PipelineConfig::from_key_values(bad_method), ValidationError);

  CHECK(config_for(Method::uotf).tradeoff().omega_s == 0.3);
  CHECK(config_for(Method::otf).tradeoff().omega_s == 0.4);
  CHECK(config_for(Method::uootf).tradeoff().omega_s == 0.4);
  CHECK(config_for(Method::kuootf).tradeoff().omega_s == 0.4);
}

TEST_CASE("training on the synthetic benchmark") {
  data::SyntheticSpec spec;
  spec.rng_seed = 7;
  const auto all = data::generate_synthetic(spec);
  std::vector<ClassId> labels;
  for (const auto& s : all) labels.push_back(s.label);
  const auto train_set = subset(all, data::sample_split(labels, data::SplitSpec{3, 20, 7}, 0).train);
  REQUIRE(train_set.size() == 60);

  const auto bundle = train(train_set, config_for(Method::uootf));
  CHECK(bundle.pca.p() == 59);
  CHECK(bundle.class_count() == 20);
  CHECK(std::get<filters::FilterBank>(bundle.bank).p == 59);
  CHECK(bundle.gallery.rows() == 60);
  CHECK(bundle.gallery.cols() == 20);
  CHECK(serialize(bundle) == serialize(train(train_set, config_for(Method::uootf))));

  const auto kb = train(train_set, config_for(Method::kuootf));
  REQUIRE(kb.is_kernel());
  const auto& kbank = std::get<kernel::KernelBank>(kb.bank);
  CHECK(kbank.train->size() == 60);
  CHECK(kbank.p() == 59);
}

TEST_CASE("classification") {
  const auto b = separable_split();
  const auto bundle = train(b.train, config_for(Method::uootf));
  for (const auto& s : b.train) {
    const auto c = classify(bundle, s.vector);
    REQUIRE(c.predicted == s.label);
    REQUIRE(c.distances[static_cast<Eigen::Index>(c.nearest)] <= 1e-12);
  }
  // With centring on, the training mean is the probe that projects to zero.
  const auto at_origin = classify(bundle, bundle.pca.mean);
  CHECK(at_origin.degenerate);
  CHECK(at_origin.feature.isZero());
  CHECK(at_origin.predicted >= 0);
  auto uncentred = config_for(Method::uootf);
  uncentred.pca_center = false;
  const auto zero = classify(train(b.train, uncentred), RealVector::Zero(64));
  CHECK(zero.degenerate);
  CHECK(zero.predicted >= 0);
  CHECK(accuracy(bundle, b.test) >= 0.95);
  CHECK_THROWS_AS(classify(bundle, RealVector::Zero(10)), ValidationError);

  int own = 0;
  for (const auto& s : b.train) {
    Eigen::Index arg;
    raw_feature(bundle, to_spectrum(bundle, s.vector).values).maxCoeff(&arg);
    own += arg == s.label;
  }
  CHECK(own >= 0.95 * static_cast<double>(b.train.size()));

  auto cosine = config_for(Method::uootf);
  cosine.metric = Metric::cosine;
  CHECK(accuracy(train(b.train, cosine), b.test) >= 0.9);
}

TEST_CASE("positive rescaling of features does not change predictions") {
  const auto b = separable_split(1);
  const auto bundle = train(b.train, config_for(Method::uootf));
  for (std::size_t i = 0; i < 10; ++i) {
    const RealVector raw = raw_feature(bundle, to_spectrum(bundle, b.test[i].vector).values);
    const auto n1 = filters::normalize_feature(raw).values;
    const auto n2 = filters::normalize_feature(RealVector(4.2 * raw)).values;
    CHECK((n1 - n2).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("origin output dumps") {
  // First class-3 training probe, scanning repetitions in order, on which
  // UOTF produces more than one near-maximal output.
  bool found = false;
  for (int rep = 0; rep < 20 && !found; ++rep) {
    const auto b = separable_split(rep);
    const auto uootf = train(b.train, config_for(Method::uootf));
    const auto uotf = train(b.train, config_for(Method::uotf));
    for (const auto& s : b.train) {
      if (s.label != 3) continue;
      const auto d = oco_dump(uootf, s.vector);
      REQUIRE(d.rows.size() == 20);
      CHECK(d.rows[3].value == 1.0);
      int peaks = 0;
      for (const auto& r : oco_dump(uotf, s.vector).rows) peaks += r.value >= 0.9;
      if (peaks < 2) continue;
      int single = 0;
      for (const auto& r : d.rows) single += r.value >= 0.9;
      CHECK(single == 1);
      CHECK(oco_csv(d).rfind("class_id,normalized_oco\n", 0) == 0);
      found = true;
      break;
    }
  }
  CHECK(found);

  const auto b = separable_split();
  const auto uootf = train(b.train, config_for(Method::uootf));
  const auto z = oco_dump(uootf, uootf.pca.mean);
  CHECK(z.degenerate);
  for (const auto& r : z.rows) CHECK(r.value == 0.0);
}

TEST_CASE("evaluate and sweep") {
  const auto all = data::generate_synthetic(data::SyntheticSpec{});
  const data::SplitSpec one{3, 1, 42};
  const auto single = evaluate(all, one, config_for(Method::uootf));
  REQUIRE(single.per_rep_accuracy.size() == 1);
  CHECK(single.mean_accuracy == single.per_rep_accuracy[0]);
  CHECK(single.std_accuracy == 0.0);

  const data::SplitSpec five{3, 5, 42};
  const auto r = evaluate(all, five, config_for(Method::uootf));
  double mean = 0;
  for (double a : r.per_rep_accuracy) mean += a / 5;
  CHECK(std::abs(r.mean_accuracy - mean) <= 1e-12);
  long total = 0;
  for (std::size_t c = 0; c < r.confusion.size(); ++c) {
    long row = 0;
    for (long v : r.confusion[c]) row += v;
    CHECK(row == 5 * 3);
    total += row;
  }
  CHECK(total == 5 * 60);
  CHECK(r.feature_dim == 20);
  CHECK(r.pca_dims == std::vector<int>(5, 59));
  CHECK(r.same_results(evaluate(all, five, config_for(Method::uootf))));

  // Different filters see the same splits: the confusion row totals agree.
  const auto u = evaluate(all, five, config_for(Method::uotf));
  for (std::size_t c = 0; c < r.confusion.size(); ++c) {
    long a = 0, bsum = 0;
    for (long v : r.confusion[c]) a += v;
    for (long v : u.confusion[c]) bsum += v;
    CHECK(a == bsum);
  }

  const auto s = sweep(all, five, config_for(Method::uootf), SweepParam::omega_s, {0.4});
  REQUIRE(s.sweep_grid.size() == 1);
  CHECK(s.sweep_grid[0].mean_accuracy == r.mean_accuracy);
  CHECK(s.per_rep_accuracy == r.per_rep_accuracy);
  CHECK(s.confusion == r.confusion);

  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
  const auto ws = sweep(all, data::SplitSpec{3, 2, 42}, config_for(Method::uootf), SweepParam::omega_s, grid);
  const auto csv = sweep_csv(ws);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
  CHECK(csv.rfind("param_value,mean_accuracy,std_accuracy\n", 0) == 0);

  std::vector<double> deltas;
  for (int i = 1; i <= 10; ++i) deltas.push_back(i);
  const auto ds = sweep(all, data::SplitSpec{3, 1, 42}, config_for(Method::kuootf), SweepParam::rbf_delta, deltas);
  CHECK(ds.sweep_grid.size() == 10);
  CHECK(ds.best_value.has_value());
  CHECK_THROWS_AS(sweep(all, five, config_for(Method::uootf), SweepParam::rbf_delta, deltas), ValidationError);
  CHECK_THROWS_AS(sweep(all, five, config_for(Method::uootf), SweepParam::omega_s, {}), ValidationError);
  CHECK_THROWS_AS(evaluate(all, data::SplitSpec{6, 1, 42}, config_for(Method::uootf)), ValidationError);

  const auto text = results_csv(r);
  CHECK(text.rfind("rep,accuracy\n", 0) == 0);
  CHECK(text.find("# mean_accuracy=") != std::string::npos);
}

TEST_CASE("every filter kind and noise setting trains") {
  const auto b = separable_split();
  for (auto m : {Method::uootf, Method::uotf, Method::otf, Method::kuootf}) {
    for (auto n : {NoiseSetting::white, NoiseSetting::ridge, NoiseSetting::explicit_}) {
      if (m == Method::kuootf && n == NoiseSetting::white) continue;
      auto c = config_for(m);
      c.noise = n;
      const auto bundle = train(b.train, c);
      CHECK(bundle.class_count() == 20);
      CHECK(classify(bundle, b.test[0].vector).feature.allFinite());
    }
  }
  auto strict = config_for(Method::otf);
  strict.otf_policy = filters::ConstraintPolicy::strict;
  CHECK_THROWS_AS(train(b.train, strict), NumericalError);
}

TEST_CASE("model bundles round-trip exactly") {
  const auto b = separable_split();
  for (auto m : {Method::uootf, Method::otf, Method::kuootf}) {
    auto c = config_for(m);
    if (m == Method::kuootf) c.noise = NoiseSetting::explicit_;
    const auto bundle = train(b.train, c);
    const auto path = scratch("model_" + to_string(m) + ".bin");
    save_model(bundle, path);
    const auto loaded = load_model(path);
    CHECK(serialize(loaded) == serialize(bundle));
    CHECK(loaded.gallery == bundle.gallery);
    CHECK(loaded.pca.basis == bundle.pca.basis);
    if (m == Method::kuootf) {
      const auto& a = std::get<kernel::KernelBank>(bundle.bank);
      const auto& l = std::get<kernel::KernelBank>(loaded.bank);
      REQUIRE(l.train->size() == a.train->size());
      for (std::size_t i = 0; i < a.train->size(); ++i) CHECK((*l.train)[i].values == (*a.train)[i].values);
    }
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(classify(loaded, b.test[i].vector).feature == classify(bundle, b.test[i].vector).feature);
    }
  }

  const auto bundle = train(b.train, config_for(Method::uootf));
  auto bytes = serialize(bundle);
  auto corrupt = bytes;
  corrupt.back() ^= 0xFF;
  CHECK_THROWS_AS(deserialize(corrupt), ValidationError);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(deserialize(flipped), ValidationError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 7);
  CHECK_THROWS_AS(deserialize(truncated), ValidationError);
  auto versioned = bytes;
  versioned[8] = 99;
  CHECK_THROWS_AS(deserialize(versioned), ValidationError);
  CHECK_THROWS_AS(load_model(scratch("missing.bin")), ValidationError);
}

TEST_CASE("concentric shells separate with an rbf kernel but not linearly") {
  const auto all = shells(300, 2024);
  SampleSet train_set, test_set;
  for (std::size_t i = 0; i < all.size(); ++i) (i < all.size() / 2 ? train_set : test_set).push_back(all[i]);

  const double linear = best_halfspace_accuracy(train_set, test_set);
  CHECK(linear <= 0.60);

  auto c = config_for(Method::kuootf);
  c.noise = NoiseSetting::ridge;
  c.kernel.delta = 0.5;
  const double rbf = accuracy(train(train_set, c), test_set);
  MESSAGE("half-space held-out accuracy " << linear << ", rbf pipeline " << rbf);
  CHECK(rbf >= 0.90);
}
