#include "birkhoff/dissipativity.hpp"

#include "birkhoff/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace birkhoff {

LagrangeForm lagrange_form(int n) {
  if (n < 1) throw std::invalid_argument("order must be at least 1");
  LagrangeForm form;
  form.n = n;
  form.h = Matrix::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    form.h(k, n - 1 - k) = Complex(0.5, 0.0);
    form.h(n + k, 2 * n - 1 - k) = Complex(-0.5, 0.0);
  }
  return form;
}

std::string to_string(DissipativityVerdict v) {
  switch (v) {
    case DissipativityVerdict::SelfAdjoint:
      return "self-adjoint";
    case DissipativityVerdict::Dissipative:
      return "dissipative";
    case DissipativityVerdict::NotDissipative:
      return "not-dissipative";
  }
  return "not-dissipative";
}

DissipativityReport dissipativity_test(const BoundaryConditionSet& bc, double tol) {
  const int n = bc.order();
  const Matrix rows = bc.row_matrix();
  if (rows.rows() != n) throw std::invalid_argument("condition set must carry n rows");

  Eigen::JacobiSVD<Matrix> svd(rows, Eigen::ComputeFullV);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > kRankTolerance * svd.singularValues()[0]) ++rank;
  if (rank < n) throw DegenerateConditionsError("boundary map is rank-deficient");

  const Matrix kernel = svd.matrixV().rightCols(2 * n - rank);
  const Matrix h = lagrange_form(n).h;
  const Matrix restricted = kernel.adjoint() * h * kernel;

  Eigen::SelfAdjointEigenSolver<Matrix> eigensolver(restricted);
  DissipativityReport report;
  report.restricted_eigenvalues = eigensolver.eigenvalues();
  report.margin = report.restricted_eigenvalues.minCoeff();

  const double max_abs = report.restricted_eigenvalues.cwiseAbs().maxCoeff();
  if (max_abs <= tol) {
    report.verdict = DissipativityVerdict::SelfAdjoint;
  } else if (report.margin >= -tol) {
    report.verdict = DissipativityVerdict::Dissipative;
  } else {
    report.verdict = DissipativityVerdict::NotDissipative;
  }
  if (bc.has_tails()) {
    report.warnings.push_back(
        "conditions carry lower-order tails; the verdict is for the essential expression D^n "
        "with the full condition rows");
  }
  return report;
}

namespace {

BoundaryConditionSet conditions_from_contraction(int n, const Matrix& contraction) {
  const Matrix h = lagrange_form(n).h;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  // Eigenvalues ascending: first n are -1/2, last n are +1/2.
  const Matrix neg = eig.eigenvectors().leftCols(n);
  const Matrix pos = eig.eigenvectors().rightCols(n);

  // Graph subspace {xi, C xi} in the diagonalizing coordinates; on it the
  // form evaluates to (|xi|^2 - |C xi|^2) / 2 >= 0 for a contraction C.
  const Matrix subspace = pos + neg * contraction;

  Eigen::JacobiSVD<Matrix> svd(subspace, Eigen::ComputeFullU);
  const Matrix complement = svd.matrixU().rightCols(n);

  std::vector<RawCondition> raw(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < 2 * n; ++c) {
      const Complex coeff = std::conj(complement(c, r));
      if (std::abs(coeff) < 1e-14) continue;
      raw[r].terms.push_back({c / n, c % n, coeff});
    }
    if (raw[r].terms.empty())
      throw DegenerateConditionsError("sampled condition row is empty");
  }
  return normalize_conditions(n, raw);
}

}  // namespace

BoundaryConditionSet sample_dissipative_bc(int n, std::uint64_t seed, double sigma) {
  if (n < 2) throw std::invalid_argument("order must be at least 2");
  if (sigma < 0.0 || sigma > 1.0)
    throw std::invalid_argument("contraction scale must lie in [0, 1]");

  for (int attempt = 0; attempt < 10; ++attempt) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(attempt), 0x1d));
    Matrix g = rng.ginibre(n, n);
    Eigen::JacobiSVD<Matrix> svd(g);
    const double norm = svd.singularValues()[0];
    Matrix contraction = (norm > 0.0) ? Matrix((sigma / norm) * g) : Matrix::Zero(n, n);
    try {
      BoundaryConditionSet bc = conditions_from_contraction(n, contraction);
      const DissipativityReport check = dissipativity_test(bc);
      if (check.verdict != DissipativityVerdict::NotDissipative) return bc;
    } catch (const DegenerateConditionsError&) {
      // resample
    }
  }
  throw DegenerateConditionsError("dissipative sampling failed after 10 attempts");
}

BoundaryConditionSet sample_selfadjoint_bc(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("order must be at least 2");

  for (int attempt = 0; attempt < 10; ++attempt) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(attempt), 0x5a));
    Matrix g = rng.ginibre(n, n);
    // Haar unitary: QR of a Ginibre matrix with the phase convention fixed.
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < n; ++k) {
      const Complex d = r(k, k);
      q.col(k) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex(1.0, 0.0);
    }
    try {
      BoundaryConditionSet bc = conditions_from_contraction(n, q);
      const DissipativityReport check = dissipativity_test(bc);
      if (check.verdict == DissipativityVerdict::SelfAdjoint) return bc;
    } catch (const DegenerateConditionsError&) {
      // resample
    }
  }
  throw DegenerateConditionsError("self-adjoint sampling failed after 10 attempts");
}

}  // namespace birkhoff
