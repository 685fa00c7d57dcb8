#include "cfa/linalg.hpp"

#include "cfa/error.hpp"

namespace cfa::linalg {

bool try_hpd_solve(const ComplexMatrix& A, const ComplexVector& b, ComplexVector& x, double* rcond) {
  Eigen::LLT<ComplexMatrix> llt(A);
  if (llt.info() != Eigen::Success) return false;
  const double rc = llt.rcond();
  if (rcond) *rcond = rc;
  if (!(rc > kMinRcond)) return false;
  x = llt.solve(b);
  return x.allFinite();
}

ComplexVector hermitian_solve(const ComplexMatrix& A, const ComplexVector& b, const std::string& what,
                              SolveReport* report) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw ValidationError(what + ": dimension mismatch");
  ComplexVector x;
  double rc = 0.0;
  if (try_hpd_solve(A, b, x, &rc)) {
    if (report) *report = {rc, false};
    return x;
  }
  Eigen::FullPivLU<ComplexMatrix> lu(A);
  const double lu_rc = lu.isInvertible() ? lu.rcond() : 0.0;
  if (!(lu_rc > kMinRcond)) {
    throw NumericalError(what + ": matrix is singular (rcond estimate " + std::to_string(lu_rc) + ")", lu_rc);
  }
  x = lu.solve(b);
  if (report) *report = {lu_rc, true};
  return x;
}

ComplexVector least_squares_solve(const ComplexMatrix& A, const ComplexVector& b, Eigen::Index* rank) {
  Eigen::CompleteOrthogonalDecomposition<ComplexMatrix> cod(A);
  cod.setThreshold(1e-12);
  if (rank) *rank = cod.rank();
  return cod.solve(b);
}

double hermitian_defect(const ComplexMatrix& A) {
  return (A - A.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace cfa::linalg
