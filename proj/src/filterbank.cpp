#include "cfa/filterbank.hpp"

#include <cmath>
#include <set>

#include "cfa/error.hpp"
#include "cfa/linalg.hpp"
#include "cfa/parallel.hpp"

namespace cfa::filters {

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::uootf: return "uootf";
    case FilterKind::uotf: return "uotf";
    case FilterKind::otf: return "otf";
  }
  return "?";
}

FilterKind parse_filter_kind(const std::string& s) {
  if (s == "uootf") return FilterKind::uootf;
  if (s == "uotf") return FilterKind::uotf;
  if (s == "otf") return FilterKind::otf;
  throw ValidationError("unknown linear filter kind: " + s);
}

TradeoffParams TradeoffParams::coupled(double omega_s) {
  if (!(omega_s >= 0.0 && omega_s <= 1.0)) throw ValidationError("omega_s must lie in [0, 1]");
  return {omega_s, std::sqrt(1.0 - omega_s * omega_s)};
}

TradeoffParams TradeoffParams::preset(FilterKind kind) {
  return coupled(kind == FilterKind::uotf ? kPresetOmegaSUotf : kPresetOmegaS);
}

void validate(const TradeoffParams& params) {
  const auto in_unit = [](double w) { return w >= 0.0 && w <= 1.0; };
  if (!in_unit(params.omega_s) || !in_unit(params.omega_n)) {
    throw ValidationError("tradeoff parameters must lie in [0, 1]");
  }
  if (params.omega_s == 0.0 && params.omega_n == 0.0) {
    throw ValidationError("tradeoff parameters omega_s and omega_n are both zero");
  }
}

namespace {

int spectrum_length(std::span<const Spectrum> spectra) {
  if (spectra.empty()) throw ValidationError("no training spectra");
  const auto p = spectra.front().values.size();
  for (const auto& s : spectra) {
    if (s.values.size() != p) throw ValidationError("training spectra have mismatched lengths");
  }
  return static_cast<int>(p);
}

void require_square(const ComplexMatrix& C, int p) {
  if (C.rows() != p || C.cols() != p) {
    throw ValidationError("noise covariance is " + std::to_string(C.rows()) + "x" + std::to_string(C.cols()) +
                          ", expected " + std::to_string(p) + "x" + std::to_string(p));
  }
}

ComplexVector intra_mean(std::span<const Spectrum> spectra, ClassId l, int p, int& count) {
  ComplexVector M = ComplexVector::Zero(p);
  count = 0;
  for (const auto& s : spectra) {
    if (s.label == l) {
      M += s.values;
      ++count;
    }
  }
  if (count == 0) throw ValidationError("class " + std::to_string(l) + " is absent from the training spectra");
  M /= static_cast<double>(count);
  return M;
}

std::string class_tag(ClassId l) { return "class " + std::to_string(l); }

}  // namespace

ClassStats class_stats(std::span<const Spectrum> spectra, ClassId l) {
  const int p = spectrum_length(spectra);
  ClassStats st;
  st.mean = intra_mean(spectra, l, p, st.n_intra);
  for (const auto& s : spectra) st.n_extra += s.label != l ? 1 : 0;
  if (st.n_extra == 0) throw ValidationError(class_tag(l) + ": no extra-class samples");
  ComplexMatrix E(p, st.n_extra);
  Eigen::Index col = 0;
  for (const auto& s : spectra) {
    if (s.label != l) E.col(col++) = s.values;
  }
  st.extra_corr = E * E.adjoint();
  st.extra_corr = (0.5 * (st.extra_corr + st.extra_corr.adjoint())).eval();
  st.extra_corr /= static_cast<double>(st.n_extra);
  return st;
}

RealVector average_power(std::span<const Spectrum> spectra) {
  const int p = spectrum_length(spectra);
  RealVector d = RealVector::Zero(p);
  for (const auto& s : spectra) d += s.values.cwiseAbs2();
  return d / static_cast<double>(spectra.size());
}

double uootf_criterion(const ComplexVector& H, const ClassStats& stats, const ComplexMatrix& C,
                       const TradeoffParams& params) {
  const ComplexMatrix T = params.omega_s * stats.extra_corr + params.omega_n * C;
  const double num = std::norm(stats.mean.dot(H));
  const double den = std::real(H.dot(T * H));
  return num / den;
}

CorrelationFilter design_uootf(const ClassStats& stats, const ComplexMatrix& C, const TradeoffParams& params,
                               ClassId class_id) {
  validate(params);
  const auto p = static_cast<int>(stats.mean.size());
  require_square(C, p);
  const ComplexMatrix T = params.omega_s * stats.extra_corr + params.omega_n * C;
  CorrelationFilter f;
  f.H = linalg::hermitian_solve(T, stats.mean, "UOOTF " + class_tag(class_id) + " tradeoff matrix");
  f.class_id = class_id;
  f.kind = FilterKind::uootf;
  f.params = params;
  return f;
}

CorrelationFilter design_uotf(std::span<const Spectrum> spectra, ClassId l, const ComplexMatrix& C,
                              const TradeoffParams& params) {
  validate(params);
  const int p = spectrum_length(spectra);
  require_square(C, p);
  int n_intra = 0;
  const ComplexVector M = intra_mean(spectra, l, p, n_intra);
  ComplexMatrix T = params.omega_n * C;
  T.diagonal() += params.omega_s * average_power(spectra).cast<Complex>();
  CorrelationFilter f;
  f.H = linalg::hermitian_solve(T, M, "UOTF " + class_tag(l) + " tradeoff matrix");
  f.class_id = l;
  f.kind = FilterKind::uotf;
  f.params = params;
  return f;
}

CorrelationFilter design_otf(std::span<const Spectrum> spectra, ClassId l, const ComplexMatrix& C,
                             const TradeoffParams& params, ConstraintPolicy policy) {
  validate(params);
  const int p = spectrum_length(spectra);
  require_square(C, p);
  const auto n = static_cast<Eigen::Index>(spectra.size());

  ComplexMatrix S(p, n);
  ComplexVector u = ComplexVector::Zero(n);
  bool present = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    S.col(i) = spectra[static_cast<std::size_t>(i)].values;
    if (spectra[static_cast<std::size_t>(i)].label == l) {
      u[i] = 1.0;
      present = true;
    }
  }
  if (!present) throw ValidationError(class_tag(l) + " is absent from the training spectra");

  const double scale = S.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if ((S.col(i) - S.col(j)).cwiseAbs().maxCoeff() <= 1e-12 * scale) {
        throw NumericalError("OTF " + class_tag(l) + ": constraint Gram matrix singular, training columns " +
                             std::to_string(i) + " and " + std::to_string(j) + " collide");
      }
    }
  }

  ComplexMatrix T = params.omega_n * C;
  T.diagonal() += params.omega_s * average_power(spectra).cast<Complex>();
  Eigen::LLT<ComplexMatrix> tllt(T);
  if (tllt.info() != Eigen::Success || !(tllt.rcond() > linalg::kMinRcond)) {
    throw NumericalError("OTF " + class_tag(l) + ": tradeoff matrix is not positive definite", tllt.rcond());
  }
  const ComplexMatrix TinvS = tllt.solve(S);
  ComplexMatrix G = S.adjoint() * TinvS;
  G = (0.5 * (G + G.adjoint())).eval();

  CorrelationFilter f;
  f.class_id = l;
  f.kind = FilterKind::otf;
  f.params = params;
  ComplexVector g;
  double rc = 0.0;
  if (!linalg::try_hpd_solve(G, u, g, &rc)) {
    if (policy == ConstraintPolicy::strict) {
      throw NumericalError("OTF " + class_tag(l) + ": constraint Gram matrix is singular (" + std::to_string(n) +
                               " constraints, p = " + std::to_string(p) + ")",
                           rc);
    }
    g = linalg::least_squares_solve(G, u);
    f.least_squares = true;
  }
  f.H = TinvS * g;
  return f;
}

FilterBank build_bank(std::span<const Spectrum> spectra, FilterKind kind, const ComplexMatrix& C,
                      const TradeoffParams& params, const BankOptions& options) {
  validate(params);
  const int p = spectrum_length(spectra);
  std::set<ClassId> labels;
  for (const auto& s : spectra) {
    if (s.label < 0) throw ValidationError("negative class label in training spectra");
    labels.insert(s.label);
  }
  const int L = *labels.rbegin() + 1;
  if (L < 2) throw ValidationError("build_bank: need at least 2 classes");

  FilterBank bank;
  bank.p = p;
  bank.kind = kind;
  bank.params = params;
  bank.filters.resize(static_cast<std::size_t>(L));
  parallel_for(
      static_cast<std::size_t>(L),
      [&](std::size_t i) {
        const auto l = static_cast<ClassId>(i);
        try {
          switch (kind) {
            case FilterKind::uootf:
              bank.filters[i] = design_uootf(class_stats(spectra, l), C, params, l);
              break;
            case FilterKind::uotf:
              bank.filters[i] = design_uotf(spectra, l, C, params);
              break;
            case FilterKind::otf:
              bank.filters[i] = design_otf(spectra, l, C, params, options.otf_policy);
              break;
          }
        } catch (const NumericalError& e) {
          throw NumericalError(std::string("filter bank, ") + class_tag(l) + ": " + e.what(), e.rcond());
        } catch (const ValidationError& e) {
          throw ValidationError(std::string("filter bank, ") + class_tag(l) + ": " + e.what());
        }
      },
      options.threads);
  return bank;
}

ComplexVector origin_outputs(const FilterBank& bank, const ComplexVector& Y) {
  if (Y.size() != bank.p) {
    throw ValidationError("extract_feature: dimension mismatch (spectrum " + std::to_string(Y.size()) +
                          ", bank p = " + std::to_string(bank.p) + ")");
  }
  ComplexVector out(bank.class_count());
  for (int l = 0; l < bank.class_count(); ++l) out[l] = Y.dot(bank.filters[static_cast<std::size_t>(l)].H);
  return out;
}

RealVector extract_feature(const FilterBank& bank, const ComplexVector& Y) {
  const ComplexVector o = origin_outputs(bank, Y);
  const RealVector re = o.real();
  const double residual = o.imag().norm();
  // Roundoff floor for features that cancel to ~0.
  double hmax = 0.0;
  for (const auto& f : bank.filters) hmax = std::max(hmax, f.H.norm());
  const double floor = 1e-9 * Y.norm() * hmax;
  if (residual > 1e-6 * std::max(re.norm(), floor)) {
    throw NumericalError("extract_feature: imaginary residual " + std::to_string(residual) +
                         " exceeds tolerance; input is not the spectrum of a real signal");
  }
  return re;
}

NormalizedFeature normalize_feature(const RealVector& x) {
  if (x.size() == 0) throw ValidationError("normalize_feature: empty feature");
  const double mx = x.maxCoeff();
  if (mx > kNormalizeEpsilon) return {x / mx, false};
  return {x, true};
}

}  // namespace cfa::filters
