#pragma once

#include <span>
#include <string>
#include <vector>

#include "cfa/spectral.hpp"
#include "cfa/types.hpp"

namespace cfa::filters {

using spectral::Spectrum;

enum class FilterKind { uootf, uotf, otf };

std::string to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& s);

/// Weights of the output-energy term (omega_s) and the noise term (omega_n).
struct TradeoffParams {
  double omega_s = 0.4;
  double omega_n = 0.9165151389911680;  // sqrt(1 - 0.4^2)

  /// omega_n = sqrt(1 - omega_s^2).
  static TradeoffParams coupled(double omega_s);
  /// Tuned defaults: omega_s = 0.4 for UOOTF and OTF, 0.3 for UOTF.
  static TradeoffParams preset(FilterKind kind);
};

void validate(const TradeoffParams& params);

inline constexpr double kPresetOmegaS = 0.4;      // OTF, UOOTF, KUOOTF
inline constexpr double kPresetOmegaSUotf = 0.3;  // UOTF

struct CorrelationFilter {
  ComplexVector H;
  ClassId class_id = 0;
  FilterKind kind = FilterKind::uootf;
  TradeoffParams params;
  /// OTF only: constraints met in the least-squares sense because the
  /// constraint Gram matrix was rank deficient.
  bool least_squares = false;
};

struct FilterBank {
  std::vector<CorrelationFilter> filters;  // ordered by class id
  int p = 0;
  FilterKind kind = FilterKind::uootf;
  TradeoffParams params;

  int class_count() const { return static_cast<int>(filters.size()); }
};

/// Per-class statistics: intra-class mean spectrum and the extra-class
/// correlation matrix R = (1/N_el) sum Y Y^+.
struct ClassStats {
  ComplexVector mean;
  ComplexMatrix extra_corr;
  int n_intra = 0;
  int n_extra = 0;
};

ClassStats class_stats(std::span<const Spectrum> spectra, ClassId l);

/// Diagonal of the average power spectrum over all samples, (1/N) sum |Y(k)|^2.
RealVector average_power(std::span<const Spectrum> spectra);

/// |M^+ H|^2 / (H^+ (omega_s R + omega_n C) H).
double uootf_criterion(const ComplexVector& H, const ClassStats& stats, const ComplexMatrix& C,
                       const TradeoffParams& params);

/// H = (omega_s R + omega_n C)^{-1} M via a Hermitian positive-definite solve.
CorrelationFilter design_uootf(const ClassStats& stats, const ComplexMatrix& C, const TradeoffParams& params,
                               ClassId class_id = 0);

/// H = (omega_s D + omega_n C)^{-1} M with D the all-sample average power.
CorrelationFilter design_uotf(std::span<const Spectrum> spectra, ClassId l, const ComplexMatrix& C,
                              const TradeoffParams& params);

enum class ConstraintPolicy {
  strict,         // singular constraint Gram matrix is an error
  least_squares,  // fall back to the minimum-norm least-squares constraint fit
};

/// H = T^{-1} S (S^+ T^{-1} S)^{-1} u with T = omega_s D + omega_n C, S the
/// training spectra as columns and u the class indicator. Exactly repeated
/// training spectra are always an error.
CorrelationFilter design_otf(std::span<const Spectrum> spectra, ClassId l, const ComplexMatrix& C,
                             const TradeoffParams& params, ConstraintPolicy policy = ConstraintPolicy::strict);

struct BankOptions {
  ConstraintPolicy otf_policy = ConstraintPolicy::strict;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// One filter per class 0..L-1, designed independently (in parallel).
FilterBank build_bank(std::span<const Spectrum> spectra, FilterKind kind, const ComplexMatrix& C,
                      const TradeoffParams& params, const BankOptions& options = {});

/// Origin outputs Y^+ H^l for every class, complex.
ComplexVector origin_outputs(const FilterBank& bank, const ComplexVector& Y);

/// Real parts of origin_outputs. Throws NumericalError if the imaginary
/// residual exceeds 1e-6 of the feature norm (inputs must be spectra of real
/// signals).
RealVector extract_feature(const FilterBank& bank, const ComplexVector& Y);

struct NormalizedFeature {
  RealVector values;
  bool degenerate = false;  // max <= kNormalizeEpsilon; values left unchanged
};

inline constexpr double kNormalizeEpsilon = 1e-12;

/// x / max(x) when max(x) > epsilon; otherwise x unchanged and flagged.
NormalizedFeature normalize_feature(const RealVector& x);

}  // namespace cfa::filters
