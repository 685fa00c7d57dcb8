#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace cfa {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

using ClassId = int;

}  // namespace cfa
