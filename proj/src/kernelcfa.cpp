#include "cfa/kernelcfa.hpp"

#include <cmath>
#include <set>

#include "cfa/error.hpp"
#include "cfa/linalg.hpp"
#include "cfa/parallel.hpp"
#include "cfa/rng.hpp"

namespace cfa::kernel {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::rbf: return "rbf";
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial: return "polynomial";
  }
  return "?";
}

KernelKind parse_kernel_kind(const std::string& s) {
  if (s == "rbf") return KernelKind::rbf;
  if (s == "linear") return KernelKind::linear;
  if (s == "polynomial" || s == "poly") return KernelKind::polynomial;
  throw ValidationError("unknown kernel: " + s);
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::ridge ? "ridge" : "explicit"; }

void validate(const KernelSpec& spec) {
  if (spec.kind == KernelKind::rbf && !(spec.delta > 0)) throw ValidationError("rbf kernel width must be > 0");
  if (spec.kind == KernelKind::polynomial && spec.degree < 1) {
    throw ValidationError("polynomial kernel degree must be >= 1");
  }
}

Complex kernel_eval(const KernelSpec& spec, const ComplexVector& X, const ComplexVector& Y) {
  if (X.size() != Y.size()) throw ValidationError("kernel_eval: dimension mismatch");
  switch (spec.kind) {
    case KernelKind::rbf:
      return std::exp(-(X - Y).squaredNorm() / (spec.delta * spec.delta));
    case KernelKind::linear:
      return X.dot(Y);
    case KernelKind::polynomial:
      return std::pow(std::real(X.dot(Y)) + spec.offset, spec.degree);
  }
  return 0.0;
}

ComplexMatrix gram(const KernelSpec& spec, std::span<const ComplexVector> a, std::span<const ComplexVector> b) {
  validate(spec);
  ComplexMatrix G(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel_eval(spec, a[i], b[j]);
    }
  }
  return G;
}

ComplexMatrix gram(const KernelSpec& spec, std::span<const Spectrum> a) {
  validate(spec);
  const auto n = static_cast<Eigen::Index>(a.size());
  ComplexMatrix G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    G(i, i) = kernel_eval(spec, a[static_cast<std::size_t>(i)].values, a[static_cast<std::size_t>(i)].values);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      G(i, j) = kernel_eval(spec, a[static_cast<std::size_t>(i)].values, a[static_cast<std::size_t>(j)].values);
      G(j, i) = std::conj(G(i, j));
    }
  }
  return G;
}

std::vector<ComplexVector> class_noise_spectra(const NoiseMode& noise, ClassId l, int count, int p) {
  return spectral::white_noise_spectra(count, p, derive_seed(noise.seed, kNoiseStream, static_cast<std::uint64_t>(l)));
}

namespace {

std::string class_tag(ClassId l) { return "KUOOTF class " + std::to_string(l); }

void require_gram(const ComplexMatrix& G, std::span<const Spectrum> train) {
  const auto n = static_cast<Eigen::Index>(train.size());
  if (G.rows() != n || G.cols() != n) throw ValidationError("kernel Gram matrix does not match training set");
}

}  // namespace

ComplexVector kernel_class_mean(const ComplexMatrix& G, std::span<const Spectrum> train, ClassId l) {
  require_gram(G, train);
  ComplexVector U = ComplexVector::Zero(G.rows());
  int n_intra = 0;
  for (std::size_t j = 0; j < train.size(); ++j) {
    if (train[j].label == l) {
      U += G.col(static_cast<Eigen::Index>(j));
      ++n_intra;
    }
  }
  if (n_intra == 0) throw ValidationError(class_tag(l) + ": class absent from training set");
  return U / static_cast<double>(n_intra);
}

ComplexMatrix kernel_tradeoff_matrix(const ComplexMatrix& G, std::span<const Spectrum> train, ClassId l,
                                     const KernelSpec& kernel, const NoiseMode& noise, const TradeoffParams& params,
                                     double jitter) {
  require_gram(G, train);
  const auto n = G.rows();
  std::vector<Eigen::Index> extra;
  for (std::size_t j = 0; j < train.size(); ++j) {
    if (train[j].label != l) extra.push_back(static_cast<Eigen::Index>(j));
  }
  if (extra.empty()) throw ValidationError(class_tag(l) + ": no extra-class samples");
  const auto n_el = static_cast<Eigen::Index>(extra.size());

  ComplexMatrix psi(n, n_el);
  for (Eigen::Index e = 0; e < n_el; ++e) psi.col(e) = G.col(extra[static_cast<std::size_t>(e)]);
  ComplexMatrix K = (params.omega_s / static_cast<double>(n_el)) * (psi * psi.adjoint());

  if (noise.kind == NoiseKind::ridge) {
    K.diagonal().array() += params.omega_n * noise.lambda;
  } else {
    const int p = static_cast<int>(train.front().values.size());
    const auto noise_spectra = class_noise_spectra(noise, l, static_cast<int>(n_el), p);
    ComplexMatrix upsilon(n, n_el);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index e = 0; e < n_el; ++e) {
        upsilon(i, e) = kernel_eval(kernel, train[static_cast<std::size_t>(i)].values,
                                    noise_spectra[static_cast<std::size_t>(e)]);
      }
    }
    K += (params.omega_n / static_cast<double>(n_el)) * (upsilon * upsilon.adjoint());
  }
  K.diagonal().array() += jitter;
  return (0.5 * (K + K.adjoint())).eval();
}

double kernel_criterion(const ComplexVector& alpha, const ComplexVector& U, const ComplexMatrix& K) {
  return std::norm(alpha.dot(U)) / std::real(alpha.dot(K * alpha));
}

KernelFilter kuootf_design(std::span<const Spectrum> train, ClassId l, const KernelSpec& kernel,
                           const NoiseMode& noise, const TradeoffParams& params, const ComplexMatrix& G_in) {
  filters::validate(params);
  validate(kernel);
  if (train.empty()) throw ValidationError(class_tag(l) + ": empty training set");
  if (noise.kind == NoiseKind::ridge && !(noise.lambda > 0)) throw ValidationError("ridge lambda must be > 0");
  const ComplexMatrix G = G_in.size() == 0 ? gram(kernel, train) : G_in;
  const ComplexVector U = kernel_class_mean(G, train, l);

  KernelFilter f;
  f.class_id = l;
  f.kernel = kernel;
  f.noise = noise;
  f.params = params;

  NoiseMode mode = noise;
  double jitter = 0.0;
  double rcond = 0.0;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    const ComplexMatrix K = kernel_tradeoff_matrix(G, train, l, kernel, mode, params, jitter);
    if (linalg::try_hpd_solve(K, U, f.alpha, &rcond)) {
      f.noise = mode;
      f.jitter = jitter;
      f.escalations = attempt;
      return f;
    }
    if (attempt == 3) break;
    if (mode.kind == NoiseKind::ridge) {
      mode.lambda *= 10.0;
    } else {
      jitter = jitter == 0.0 ? 1e-10 * std::real(K.trace()) / static_cast<double>(K.rows()) : jitter * 10.0;
    }
  }
  throw NumericalError(class_tag(l) + ": kernel tradeoff matrix singular after 3 regularisation escalations "
                           "(rcond estimate " + std::to_string(rcond) + ")",
                       rcond);
}

KernelBank build_kernel_bank(std::vector<Spectrum> train, const KernelSpec& kernel, const NoiseMode& noise,
                             const TradeoffParams& params, unsigned threads) {
  if (train.empty()) throw ValidationError("kernel bank: empty training set");
  std::set<ClassId> labels;
  for (const auto& s : train) {
    if (s.label < 0) throw ValidationError("negative class label in training spectra");
    if (s.values.size() != train.front().values.size()) throw ValidationError("training spectra have mismatched lengths");
    labels.insert(s.label);
  }
  const int L = *labels.rbegin() + 1;
  if (L < 2) throw ValidationError("kernel bank: need at least 2 classes");

  KernelBank bank;
  bank.train = std::make_shared<const std::vector<Spectrum>>(std::move(train));
  bank.kernel = kernel;
  bank.noise = noise;
  bank.params = params;
  bank.filters.resize(static_cast<std::size_t>(L));
  const std::span<const Spectrum> spectra(*bank.train);
  const ComplexMatrix G = gram(kernel, spectra);
  parallel_for(
      static_cast<std::size_t>(L),
      [&](std::size_t i) { bank.filters[i] = kuootf_design(spectra, static_cast<ClassId>(i), kernel, noise, params, G); },
      threads);
  return bank;
}

RealVector kernel_feature(const KernelBank& bank, const ComplexVector& Y) {
  if (!bank.train || Y.size() != bank.p()) throw ValidationError("kernel_feature: dimension mismatch");
  const auto& train = *bank.train;
  ComplexVector kv(static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    kv[static_cast<Eigen::Index>(i)] = kernel_eval(bank.kernel, train[i].values, Y);
  }
  RealVector out(bank.class_count());
  for (int l = 0; l < bank.class_count(); ++l) out[l] = std::real(bank.filters[static_cast<std::size_t>(l)].alpha.dot(kv));
  return out;
}

}  // namespace cfa::kernel
