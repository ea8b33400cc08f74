#include "birkhoff/regularity.hpp"

#include <Eigen/LU>

#include <cmath>

namespace birkhoff {

Complex unity_root(int n, int j) {
  if (j < 0 || j >= n) throw std::invalid_argument("unity root index out of range");
  const double angle = 2.0 * M_PI * j / n;
  return Complex(std::cos(angle), std::sin(angle));
}

Vector b_column(const BoundaryConditionSet& bc, int superscript, int k) {
  const int n = bc.order();
  if (k < 0 || k >= n) throw std::invalid_argument("column index out of range");
  if (superscript != 0 && superscript != 1)
    throw std::invalid_argument("superscript must be 0 or 1");
  Vector column = Vector::Zero(n);
  int row = 0;
  for (int j = 0; j < n; ++j) {
    const ConditionBlock& block = bc.block(j);
    const Matrix& lead = (superscript == 0) ? block.lead0 : block.lead1;
    const Complex eps_pow = unity_root(n, (j * k) % n);  // eps_k^j
    for (int i = 0; i < block.rank(); ++i, ++row) column[row] = lead(i, 0) * eps_pow;
  }
  return column;
}

Matrix b_column_matrix(const BoundaryConditionSet& bc, int superscript) {
  const int n = bc.order();
  Matrix q(n, n);
  for (int k = 0; k < n; ++k) q.col(k) = b_column(bc, superscript, k);
  return q;
}

namespace {

Complex determinant(const Matrix& m) { return Eigen::PartialPivLU<Matrix>(m).determinant(); }

double column_norm_product(const Matrix& m) {
  double product = 1.0;
  for (int k = 0; k < m.cols(); ++k) product *= m.col(k).norm();
  return product;
}

ThetaResult theta_from_matrix(ThetaMatrix matrix) {
  ThetaResult result;
  result.value = determinant(matrix.entries);
  const double scale = column_norm_product(matrix.entries);
  result.normalized_margin = (scale > 1e-300) ? std::abs(result.value) / scale : 0.0;
  result.matrix = std::move(matrix);
  return result;
}

}  // namespace

ThetaResult theta(const BoundaryConditionSet& bc, int p, bool swapped) {
  const int n = bc.order();
  if (p < 0 || p > n) throw std::invalid_argument("split index p must lie in [0, n]");
  ThetaMatrix matrix;
  matrix.entries.resize(n, n);
  matrix.column_labels.reserve(n);
  for (int k = 0; k < n; ++k) {
    int superscript = (k < p) ? 0 : 1;
    if (swapped) superscript = 1 - superscript;
    matrix.entries.col(k) = b_column(bc, superscript, k);
    matrix.column_labels.emplace_back(k, superscript);
  }
  return theta_from_matrix(std::move(matrix));
}

StrongRegularityPolynomial strong_regularity_polynomial(const BoundaryConditionSet& bc) {
  const int n = bc.order();
  if (n % 2 != 0)
    throw std::invalid_argument("strong regularity polynomial defined only for even n");
  const int q = n / 2;

  auto evaluate = [&](Complex s) {
    Matrix m(n, n);
    for (int k = 0; k < n; ++k) {
      if (k == 0)
        m.col(k) = b_column(bc, 0, 0) + s * b_column(bc, 1, 0);
      else if (k < q)
        m.col(k) = b_column(bc, 0, k);
      else if (k == q)
        m.col(k) = b_column(bc, 1, q) + s * b_column(bc, 0, q);
      else
        m.col(k) = b_column(bc, 1, k);
    }
    return determinant(m);
  };

  // Two columns are affine in s, so F is a quadratic; three evaluations pin
  // the coefficients exactly.
  const Complex f0 = evaluate(Complex(0.0, 0.0));
  const Complex f1 = evaluate(Complex(1.0, 0.0));
  const Complex fm1 = evaluate(Complex(-1.0, 0.0));

  StrongRegularityPolynomial result;
  result.c0 = f0;
  result.c1 = 0.5 * (f1 - fm1);
  result.c2 = 0.5 * (f1 + fm1) - f0;

  const double scale = std::abs(result.c0) + std::abs(result.c1) + std::abs(result.c2);
  if (scale <= 1e-300) {
    result.identically_zero = true;
    return result;
  }

  const double degenerate_tol = 1e-12 * scale;
  if (std::abs(result.c2) <= degenerate_tol) {
    // Degenerate (at most linear): cannot have two simple roots.
    if (std::abs(result.c1) > degenerate_tol) {
      result.roots.push_back(-result.c0 / result.c1);
      result.root_simple.push_back(true);
    }
    return result;
  }

  const Complex disc = result.c1 * result.c1 - 4.0 * result.c2 * result.c0;
  const Complex sqrt_disc = std::sqrt(disc);
  // Stable quadratic formula: compute the larger-magnitude root first.
  const Complex qq = -0.5 * (result.c1 + (std::real(std::conj(result.c1) * sqrt_disc) >= 0.0
                                              ? sqrt_disc
                                              : -sqrt_disc));
  Complex r0, r1;
  if (std::abs(qq) > 1e-300) {
    r0 = qq / result.c2;
    r1 = result.c0 / qq;
  } else {
    r0 = Complex(0.0, 0.0);
    r1 = Complex(0.0, 0.0);
  }
  const double root_tol = 1e-8 * (1.0 + std::abs(r0) + std::abs(r1));
  const bool simple = std::abs(r0 - r1) > root_tol;
  result.roots = {r0, r1};
  result.root_simple = {simple, simple};
  result.two_simple_roots = simple;
  return result;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::StronglyRegular:
      return "strongly-regular";
    case Classification::Regular:
      return "regular";
    case Classification::HalfRegularOnly:
      return "half-regular-only";
    case Classification::Irregular:
      return "irregular";
  }
  return "irregular";
}

RegularityReport classify(const BoundaryConditionSet& bc, double tol_theta) {
  RegularityReport report;
  report.n = bc.order();
  report.q = report.n / 2;

  const ThetaResult forward = theta(bc, report.q, false);
  const ThetaResult swapped = theta(bc, report.q, true);
  report.theta_forward = forward.value;
  report.theta_swapped = swapped.value;
  report.margin_forward = forward.normalized_margin;
  report.margin_swapped = swapped.normalized_margin;
  for (int p = 0; p <= report.n; ++p) report.theta_by_p[p] = theta(bc, p, false).value;

  const bool forward_nonzero = forward.normalized_margin > tol_theta;
  const bool swapped_nonzero = swapped.normalized_margin > tol_theta;

  if (report.n % 2 == 0) {
    report.f_polynomial = strong_regularity_polynomial(bc);
    if (!forward_nonzero) {
      report.classification = Classification::Irregular;
    } else if (report.f_polynomial.two_simple_roots) {
      report.classification = Classification::StronglyRegular;
    } else {
      report.classification = Classification::Regular;
    }
  } else {
    // Odd order: regular requires both orientations; a regular odd-order
    // problem is automatically strongly regular. One-sided nonvanishing is
    // the weaker half-regularity.
    if (forward_nonzero && swapped_nonzero) {
      report.classification = Classification::StronglyRegular;
    } else if (forward_nonzero || swapped_nonzero) {
      report.classification = Classification::HalfRegularOnly;
    } else {
      report.classification = Classification::Irregular;
    }
  }
  return report;
}

double fourier_factor_residual(const BoundaryConditionSet& bc) {
  const int n = bc.order();
  Matrix psi(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) psi(j, k) = unity_root(n, (j * k) % n);

  double residual = 0.0;
  for (int superscript = 0; superscript < 2; ++superscript) {
    const Matrix q = b_column_matrix(bc, superscript);
    Matrix product = (q * psi.adjoint()) / static_cast<double>(n);
    // Expected: block column j carries b_j^i, all other entries zero.
    int row = 0;
    for (int j = 0; j < n; ++j) {
      const ConditionBlock& block = bc.block(j);
      const Matrix& lead = (superscript == 0) ? block.lead0 : block.lead1;
      for (int i = 0; i < block.rank(); ++i, ++row) product(row, j) -= lead(i, 0);
    }
    residual = std::max(residual, product.cwiseAbs().maxCoeff());
  }
  return residual;
}

}  // namespace birkhoff
