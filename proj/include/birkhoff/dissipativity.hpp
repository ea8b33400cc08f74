#pragma once

#include "birkhoff/conditions.hpp"
#include "birkhoff/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace birkhoff {

/// Hermitian form H on boundary vectors
/// Y(u) = (u(0), Du(0), ..., D^{n-1}u(0), u(1), ..., D^{n-1}u(1)) with
/// Im<D^n u, u> = Y* H Y. Integration by parts gives the closed form
/// H = (1/2) blockdiag(J, -J) with J the antidiagonal exchange matrix;
/// the form has signature (n, n).
struct LagrangeForm {
  int n = 0;
  Matrix h;  // 2n x 2n Hermitian
};

LagrangeForm lagrange_form(int n);

enum class DissipativityVerdict { SelfAdjoint, Dissipative, NotDissipative };

std::string to_string(DissipativityVerdict v);

struct DissipativityReport {
  DissipativityVerdict verdict = DissipativityVerdict::NotDissipative;
  /// Spectrum of the Lagrange form restricted to the null space of the
  /// boundary map (orthonormal basis K, eigenvalues of K* H K).
  RealVector restricted_eigenvalues;
  double margin = 0.0;  // smallest restricted eigenvalue
  std::vector<std::string> warnings;
};

/// Decides dissipativity / self-adjointness of the conditions attached to
/// the essential expression D^n. The boundary map uses the full normalized
/// rows (leading blocks and tails): the verdict depends only on the row
/// space, so it is invariant under recombination of the conditions.
DissipativityReport dissipativity_test(const BoundaryConditionSet& bc, double tol = 1e-10);

/// Random boundary conditions whose null space is nonnegative for the
/// Lagrange form: the graph subspace of a contraction C with operator norm
/// sigma in coordinates that diagonalize H. sigma = 0 gives strictly
/// dissipative sets, unitary C gives self-adjoint ones.
BoundaryConditionSet sample_dissipative_bc(int n, std::uint64_t seed, double sigma);

BoundaryConditionSet sample_selfadjoint_bc(int n, std::uint64_t seed);

}  // namespace birkhoff
