#include "cfa/subspace.hpp"

#include <algorithm>

#include "cfa/error.hpp"

namespace cfa::subspace {

namespace {

// Relative eigenvalue floor below which a direction counts as rank-deficient.
constexpr double kRankTolerance = 1e-10;

void fix_signs(RealMatrix& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index imax = 0;
    basis.col(j).cwiseAbs().maxCoeff(&imax);
    if (basis(imax, j) < 0) basis.col(j) *= -1.0;
  }
}

}  // namespace

PcaModel pca_fit(const RealMatrix& data_rows, const PcaOptions& options) {
  const Eigen::Index n = data_rows.rows();
  const Eigen::Index dim = data_rows.cols();
  if (n < 2) throw ValidationError("pca_fit: need at least 2 samples");
  if (!data_rows.allFinite()) throw ValidationError("pca_fit: non-finite input");

  PcaModel model;
  model.centered = options.center;
  model.mean = options.center ? RealVector(data_rows.colwise().mean().transpose()) : RealVector::Zero(dim);
  const RealMatrix centered = data_rows.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);

  RealVector evals;
  RealMatrix evecs;  // dim x k
  if (dim > n) {
    // Gram trick: X X^T v = lambda v  =>  X^T v / sqrt(lambda) is a unit
    // eigenvector of X^T X with the same eigenvalue.
    const RealMatrix gram = centered * centered.transpose() / denom;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("pca_fit: Gram eigendecomposition failed");
    evals = es.eigenvalues().reverse();
    evecs = centered.transpose() * es.eigenvectors().rowwise().reverse();
  } else {
    const RealMatrix cov = centered.transpose() * centered / denom;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(cov);
    if (es.info() != Eigen::Success) throw NumericalError("pca_fit: covariance eigendecomposition failed");
    evals = es.eigenvalues().reverse();
    evecs = es.eigenvectors().rowwise().reverse();
  }

  const double top = std::max(evals.size() > 0 ? evals[0] : 0.0, 0.0);
  Eigen::Index rank = 0;
  while (rank < evals.size() && top > 0 && evals[rank] > kRankTolerance * top) ++rank;
  if (rank == 0) throw ValidationError("pca_fit: zero-variance data (rank 0)");

  const Eigen::Index limit = std::min<Eigen::Index>(rank, options.center ? n - 1 : n);
  Eigen::Index p = limit;
  if (options.p) {
    if (*options.p < 1) throw ValidationError("pca_fit: requested p must be >= 1");
    if (*options.p > limit) {
      throw ValidationError("pca_fit: requested p = " + std::to_string(*options.p) +
                            " exceeds available rank " + std::to_string(limit));
    }
    p = *options.p;
  }

  model.eigvals = evals.head(p).cwiseMax(0.0);
  model.basis = evecs.leftCols(p);
  for (Eigen::Index j = 0; j < p; ++j) model.basis.col(j).normalize();
  fix_signs(model.basis);
  return model;
}

PcaModel pca_fit(const SampleSet& samples, const PcaOptions& options) {
  validate_samples(samples);
  RealMatrix rows(static_cast<Eigen::Index>(samples.size()), samples.front().vector.size());
  for (std::size_t i = 0; i < samples.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = samples[i].vector.transpose();
  return pca_fit(rows, options);
}

RealVector pca_project(const PcaModel& model, const RealVector& x) {
  if (x.size() != model.mean.size()) {
    throw ValidationError("pca_project: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(model.mean.size()) + ")");
  }
  return model.basis.transpose() * (x - model.mean);
}

RealVector pca_reconstruct(const PcaModel& model, const RealVector& coefficients) {
  if (coefficients.size() != model.p()) throw ValidationError("pca_reconstruct: dimension mismatch");
  return model.mean + model.basis * coefficients;
}

}  // namespace cfa::subspace
