#pragma once

#include <optional>

#include "cfa/sample.hpp"
#include "cfa/types.hpp"

namespace cfa::subspace {

struct PcaModel {
  RealVector mean;     // zero when centring is disabled
  RealMatrix basis;    // m_feat x p, orthonormal columns
  RealVector eigvals;  // p, nonincreasing
  bool centered = true;

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index p() const { return basis.cols(); }
};

struct PcaOptions {
  std::optional<int> p;  // nullopt = auto: min(N - 1, rank)
  bool center = true;
};

/// Eigenvectors of the sample covariance (1/(N-1) normalisation), largest
/// eigenvalue first, each signed so its largest-magnitude entry is positive.
/// Uses the N x N Gram matrix when m_feat > N.
PcaModel pca_fit(const RealMatrix& data_rows, const PcaOptions& options = {});
PcaModel pca_fit(const SampleSet& samples, const PcaOptions& options = {});

/// basis^T (x - mean).
RealVector pca_project(const PcaModel& model, const RealVector& x);

/// mean + basis * coefficients.
RealVector pca_reconstruct(const PcaModel& model, const RealVector& coefficients);

}  // namespace cfa::subspace
