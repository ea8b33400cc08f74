#pragma once

#include "birkhoff/conditions.hpp"
#include "birkhoff/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace birkhoff {

/// epsilon_j = exp(2*pi*i*j/n), the n-th roots of unity.
Complex unity_root(int n, int j);

/// Column B_k^i: the blocks b_j^i * epsilon_k^j stacked over j = 0..n-1.
Vector b_column(const BoundaryConditionSet& bc, int superscript, int k);

/// The n x n matrix whose columns are B_t^i for t = 0..n-1.
Matrix b_column_matrix(const BoundaryConditionSet& bc, int superscript);

/// Theta determinant matrix together with the (k, superscript) label of each
/// assembled column.
struct ThetaMatrix {
  Matrix entries;
  std::vector<std::pair<int, int>> column_labels;
};

struct ThetaResult {
  Complex value;
  ThetaMatrix matrix;
  /// |value| divided by the product of Euclidean column norms; 0 when a
  /// column vanishes. Scale-invariant margin used for "nonzero" decisions.
  double normalized_margin = 0.0;
};

/// Regularity determinant with split index p: columns B_k^0 for k < p and
/// B_k^1 for k >= p (superscripts exchanged when `swapped`).
ThetaResult theta(const BoundaryConditionSet& bc, int p, bool swapped = false);

/// The quadratic F(s) deciding strong regularity for even n. Coefficients are
/// recovered from evaluations at s = 0, 1, -1 (exact for a quadratic).
struct StrongRegularityPolynomial {
  Complex c2, c1, c0;
  std::vector<Complex> roots;       // empty, one, or two entries
  std::vector<bool> root_simple;    // per root
  bool two_simple_roots = false;
  bool identically_zero = false;
};

StrongRegularityPolynomial strong_regularity_polynomial(const BoundaryConditionSet& bc);

enum class Classification { StronglyRegular, Regular, HalfRegularOnly, Irregular };

std::string to_string(Classification c);

struct RegularityReport {
  int n = 0;
  int q = 0;
  Complex theta_forward;
  Complex theta_swapped;
  double margin_forward = 0.0;
  double margin_swapped = 0.0;
  std::map<int, Complex> theta_by_p;  // p = 0..n, forward orientation
  StrongRegularityPolynomial f_polynomial;  // even n only
  Classification classification = Classification::Irregular;
};

/// Classifies normalized boundary conditions. Even n: regular when the
/// forward determinant margin clears `tol_theta`, strongly regular when in
/// addition F(s) has two simple roots. Odd n: both orientations nonzero is
/// automatically strongly regular; exactly one nonzero is half-regular-only.
RegularityReport classify(const BoundaryConditionSet& bc,
                          double tol_theta = kDefaultThetaTolerance);

/// Max-abs residual of the exact factorization identity
/// (1/n) * Q^i * Psi^* = blockdiag(b_j^i), with Psi = (epsilon_j^k).
/// Zero up to round-off for every normalized set.
double fourier_factor_residual(const BoundaryConditionSet& bc);

}  // namespace birkhoff
