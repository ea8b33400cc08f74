#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace birkhoff {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kImagUnit{0.0, 1.0};

/// Radius below which large-|rho| asymptotic assertions are not claimed.
inline constexpr double kAsymptoticRadius = 10.0;

/// Scale-invariant threshold deciding "determinant != 0" in classification.
inline constexpr double kDefaultThetaTolerance = 1e-8;

/// Singular-value tolerance for rank decisions on condition blocks.
inline constexpr double kRankTolerance = 1e-10;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateConditionsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NearEigenvalueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace birkhoff
