#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfa/filterbank.hpp"
#include "cfa/spectral.hpp"
#include "cfa/types.hpp"

namespace cfa::kernel {

using filters::TradeoffParams;
using spectral::Spectrum;

enum class KernelKind { rbf, linear, polynomial };

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& s);

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double delta = 3.0;  // rbf width
  int degree = 2;      // polynomial
  double offset = 1.0; // polynomial
};

void validate(const KernelSpec& spec);

/// rbf: exp(-||X - Y||^2 / delta^2); linear: X^+ Y;
/// polynomial: (Re(X^+ Y) + offset)^degree. All satisfy k(X,Y) = conj(k(Y,X)).
Complex kernel_eval(const KernelSpec& spec, const ComplexVector& X, const ComplexVector& Y);

/// G(i, j) = k(a_i, b_j).
ComplexMatrix gram(const KernelSpec& spec, std::span<const ComplexVector> a, std::span<const ComplexVector> b);
ComplexMatrix gram(const KernelSpec& spec, std::span<const Spectrum> a);

enum class NoiseKind {
  ridge,     // omega_n * lambda * I in place of the noise Gram term
  explicit_, // seeded white-noise spectra pushed through the kernel
};

std::string to_string(NoiseKind kind);

struct NoiseMode {
  NoiseKind kind = NoiseKind::ridge;
  double lambda = 1.0;      // ridge strength
  std::uint64_t seed = 0;   // explicit: per-class noise seeds derive from this
};

/// The explicit-mode noise spectra for class l: N_el draws from
/// spectral::white_noise_spectra seeded with derive_seed(seed, noise, l).
std::vector<ComplexVector> class_noise_spectra(const NoiseMode& noise, ClassId l, int count, int p);

struct KernelFilter {
  ComplexVector alpha;  // weights over the retained training spectra
  ClassId class_id = 0;
  KernelSpec kernel;
  NoiseMode noise;
  TradeoffParams params;
  double jitter = 0.0;  // diagonal added by singularity escalation
  int escalations = 0;
};

struct KernelBank {
  std::shared_ptr<const std::vector<Spectrum>> train;
  std::vector<KernelFilter> filters;  // ordered by class id
  KernelSpec kernel;
  NoiseMode noise;
  TradeoffParams params;

  int class_count() const { return static_cast<int>(filters.size()); }
  int p() const { return train && !train->empty() ? static_cast<int>(train->front().values.size()) : 0; }
};

/// U_i = (1/N_l) sum_j k(Y_i, Y_j^I): kernel mean against class l.
ComplexVector kernel_class_mean(const ComplexMatrix& G, std::span<const Spectrum> train, ClassId l);

/// K = omega_s (1/N_el) sum_e psi_e psi_e^+ + noise term, psi_e = G.col(e).
/// `jitter` is added to the diagonal.
ComplexMatrix kernel_tradeoff_matrix(const ComplexMatrix& G, std::span<const Spectrum> train, ClassId l,
                                     const KernelSpec& kernel, const NoiseMode& noise, const TradeoffParams& params,
                                     double jitter = 0.0);

/// |alpha^+ U|^2 / (alpha^+ K alpha).
double kernel_criterion(const ComplexVector& alpha, const ComplexVector& U, const ComplexMatrix& K);

/// alpha = K^{-1} U. If K is numerically singular the regularisation is
/// escalated tenfold up to 3 times (ridge: lambda; explicit: a diagonal
/// jitter starting at 1e-10 tr(K)/N) before NumericalError.
/// `G` is the training Gram matrix; computed when empty.
KernelFilter kuootf_design(std::span<const Spectrum> train, ClassId l, const KernelSpec& kernel,
                           const NoiseMode& noise, const TradeoffParams& params, const ComplexMatrix& G = {});

KernelBank build_kernel_bank(std::vector<Spectrum> train, const KernelSpec& kernel, const NoiseMode& noise,
                             const TradeoffParams& params, unsigned threads = 0);

/// Component l = Re(sum_i conj(alpha_i^l) k(Y_i, Y)).
RealVector kernel_feature(const KernelBank& bank, const ComplexVector& Y);

}  // namespace cfa::kernel
