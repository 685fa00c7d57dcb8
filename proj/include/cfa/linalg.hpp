#pragma once

#include <string>

#include "cfa/types.hpp"

namespace cfa::linalg {

struct SolveReport {
  double rcond = 0.0;       // reciprocal condition estimate of the factored matrix
  bool used_fallback = false;
};

/// Reciprocal condition number below which a factorization is rejected.
inline constexpr double kMinRcond = 1e-14;

/// Solves A x = b for Hermitian A. Tries a Cholesky (LLT) factorization; if A
/// is not numerically positive definite, falls back to a full-pivoting LU and
/// flags it. Throws NumericalError naming `what` when A is singular.
ComplexVector hermitian_solve(const ComplexMatrix& A, const ComplexVector& b, const std::string& what,
                              SolveReport* report = nullptr);

/// Strict variant: Cholesky only. Returns false (and leaves x untouched) if A
/// is not numerically positive definite.
bool try_hpd_solve(const ComplexMatrix& A, const ComplexVector& b, ComplexVector& x, double* rcond = nullptr);

/// Minimum-norm least-squares solution via complete orthogonal decomposition.
ComplexVector least_squares_solve(const ComplexMatrix& A, const ComplexVector& b, Eigen::Index* rank = nullptr);

/// Largest |A - A^+| entry.
double hermitian_defect(const ComplexMatrix& A);

}  // namespace cfa::linalg
