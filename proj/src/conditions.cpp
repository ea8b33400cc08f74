#include "birkhoff/conditions.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace birkhoff {

namespace {

constexpr double kPivotTolerance = 1e-12;

}  // namespace

Eigen::RowVectorXcd RawCondition::to_row(int n) const {
  Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(2 * n);
  for (const auto& term : terms) {
    if (term.end != 0 && term.end != 1) throw std::invalid_argument("condition end must be 0 or 1");
    if (term.order < 0 || term.order >= n)
      throw std::invalid_argument("condition order exceeds n-1");
    row[term.end * n + term.order] += term.coeff;
  }
  return row;
}

BoundaryConditionSet::BoundaryConditionSet(int n, std::vector<ConditionBlock> blocks)
    : n_(n), blocks_(std::move(blocks)) {
  if (static_cast<int>(blocks_.size()) != n_)
    throw std::invalid_argument("expected one block slot per order 0..n-1");
}

int BoundaryConditionSet::rank_sum() const {
  int sum = 0;
  for (const auto& b : blocks_) sum += b.rank();
  return sum;
}

bool BoundaryConditionSet::has_tails() const {
  for (const auto& b : blocks_) {
    if (b.rank() == 0) continue;
    if (b.tail0.size() > 0 && b.tail0.cwiseAbs().maxCoeff() > 0.0) return true;
    if (b.tail1.size() > 0 && b.tail1.cwiseAbs().maxCoeff() > 0.0) return true;
  }
  return false;
}

Matrix BoundaryConditionSet::row_matrix() const {
  Matrix rows = Matrix::Zero(rank_sum(), 2 * n_);
  int r = 0;
  for (int j = 0; j < n_; ++j) {
    const ConditionBlock& b = blocks_[j];
    for (int i = 0; i < b.rank(); ++i, ++r) {
      rows(r, j) = b.lead0(i, 0);
      rows(r, n_ + j) = b.lead1(i, 0);
      for (int k = 0; k < j; ++k) {
        rows(r, k) = b.tail0(i, k);
        rows(r, n_ + k) = b.tail1(i, k);
      }
    }
  }
  return rows;
}

BoundaryConditionSet BoundaryConditionSet::essential() const {
  std::vector<ConditionBlock> blocks = blocks_;
  for (auto& b : blocks) {
    b.tail0.setZero();
    b.tail1.setZero();
  }
  return BoundaryConditionSet(n_, std::move(blocks));
}

BoundaryConditionSet normalize_conditions(int n, const std::vector<RawCondition>& raw) {
  if (n < 2) throw std::invalid_argument("order must be at least 2");
  if (static_cast<int>(raw.size()) != n)
    throw std::invalid_argument("expected exactly n boundary conditions");

  std::vector<Eigen::RowVectorXcd> rows;
  rows.reserve(raw.size());
  for (const auto& condition : raw) {
    Eigen::RowVectorXcd row = condition.to_row(n);
    const double scale = row.cwiseAbs().maxCoeff();
    if (scale <= 0.0) throw std::invalid_argument("condition has no nonzero coefficient");
    rows.push_back(row / scale);
  }

  std::vector<bool> assigned(rows.size(), false);
  // pivot_rows[j] lists the row indices assigned to leading order j, in block
  // row order (end-0 row first for rank-2 blocks).
  std::vector<std::vector<int>> pivot_rows(n);

  auto entry = [&](int r, int col_end, int j) -> Complex& { return rows[r][col_end * n + j]; };

  for (int j = n - 1; j >= 0; --j) {
    // First pivot: largest-magnitude leading coefficient over the unassigned
    // rows, end 0 before end 1 on ties.
    int p1 = -1, c1 = -1;
    double best = kPivotTolerance;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (assigned[r]) continue;
      for (int e = 0; e < 2; ++e) {
        const double mag = std::abs(entry(static_cast<int>(r), e, j));
        if (mag > best) {
          best = mag;
          p1 = static_cast<int>(r);
          c1 = e;
        }
      }
    }
    if (p1 < 0) continue;  // no conditions of leading order j

    rows[p1] /= entry(p1, c1, j);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (assigned[r] || static_cast<int>(r) == p1) continue;
      const Complex factor = entry(static_cast<int>(r), c1, j);
      if (factor != Complex(0.0, 0.0)) {
        rows[r] -= factor * rows[p1];
        entry(static_cast<int>(r), c1, j) = Complex(0.0, 0.0);
      }
    }
    assigned[p1] = true;

    // Second pivot in the other column, if the order-j block has rank 2.
    const int c2 = 1 - c1;
    int p2 = -1;
    best = kPivotTolerance;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (assigned[r]) continue;
      const double mag = std::abs(entry(static_cast<int>(r), c2, j));
      if (mag > best) {
        best = mag;
        p2 = static_cast<int>(r);
      }
    }

    if (p2 < 0) {
      // Rank 1: residual order-j coefficients of the other rows are
      // elimination dust; clear them exactly.
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (assigned[r] || static_cast<int>(r) == p1) continue;
        entry(static_cast<int>(r), c2, j) = Complex(0.0, 0.0);
      }
      pivot_rows[j] = {p1};
      continue;
    }

    rows[p2] /= entry(p2, c2, j);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (assigned[r] || static_cast<int>(r) == p2) continue;
      if (static_cast<int>(r) == p1) continue;  // handled by the recombination below
      const Complex factor = entry(static_cast<int>(r), c2, j);
      if (factor != Complex(0.0, 0.0)) {
        rows[r] -= factor * rows[p2];
        entry(static_cast<int>(r), c2, j) = Complex(0.0, 0.0);
      }
    }
    assigned[p2] = true;

    // Recombine the two pivot rows so the leading 2x2 block is the identity.
    const int r0 = (c1 == 0) ? p1 : p2;  // row whose pivot sits at end 0
    const int r1 = (c1 == 0) ? p2 : p1;
    Eigen::Matrix2cd lead;
    lead << entry(r0, 0, j), entry(r0, 1, j), entry(r1, 0, j), entry(r1, 1, j);
    Eigen::Matrix2cd inv = lead.inverse();
    const Eigen::RowVectorXcd row0 = inv(0, 0) * rows[r0] + inv(0, 1) * rows[r1];
    const Eigen::RowVectorXcd row1 = inv(1, 0) * rows[r0] + inv(1, 1) * rows[r1];
    rows[r0] = row0;
    rows[r1] = row1;
    entry(r0, 0, j) = Complex(1.0, 0.0);
    entry(r0, 1, j) = Complex(0.0, 0.0);
    entry(r1, 0, j) = Complex(0.0, 0.0);
    entry(r1, 1, j) = Complex(1.0, 0.0);
    pivot_rows[j] = {r0, r1};
  }

  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!assigned[r]) throw DegenerateConditionsError("degenerate condition set");
  }

  std::vector<ConditionBlock> blocks(n);
  for (int j = 0; j < n; ++j) {
    const int rank = static_cast<int>(pivot_rows[j].size());
    ConditionBlock& b = blocks[j];
    b.order = j;
    b.lead0 = Matrix::Zero(rank, 1);
    b.lead1 = Matrix::Zero(rank, 1);
    b.tail0 = Matrix::Zero(rank, j);
    b.tail1 = Matrix::Zero(rank, j);
    for (int i = 0; i < rank; ++i) {
      const int r = pivot_rows[j][i];
      b.lead0(i, 0) = rows[r][j];
      b.lead1(i, 0) = rows[r][n + j];
      for (int k = 0; k < j; ++k) {
        b.tail0(i, k) = rows[r][k];
        b.tail1(i, k) = rows[r][n + k];
      }
    }
  }
  return BoundaryConditionSet(n, std::move(blocks));
}

ValidationReport validate(const BoundaryConditionSet& bc) {
  ValidationReport report;
  const int n = bc.order();
  for (int j = 0; j < n; ++j) {
    const ConditionBlock& b = bc.block(j);
    const int rank = b.rank();
    report.rank_sum += rank;
    if (rank == 0) continue;

    ValidationReport::BlockCheck check;
    check.order = j;
    check.rank = rank;

    Matrix lead(rank, 2);
    lead.col(0) = b.lead0.col(0);
    lead.col(1) = b.lead1.col(0);
    Eigen::JacobiSVD<Matrix> svd(lead);
    check.svd_rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()[i] > kRankTolerance) ++check.svd_rank;
    }
    if (check.svd_rank != rank) {
      report.pass = false;
      report.failures.push_back("rank deficiency in order " + std::to_string(j));
    }
    if (rank == 2) {
      check.identity_ok = (lead - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= kRankTolerance;
      if (!check.identity_ok) {
        report.pass = false;
        report.failures.push_back("rank-2 block at order " + std::to_string(j) +
                                  " is not the identity");
      }
    }
    report.blocks.push_back(check);
  }
  if (report.rank_sum != n) {
    report.pass = false;
    report.failures.push_back("rank sum");
  }
  return report;
}

std::pair<DifferentialExpression, BoundaryConditionSet> essential_part(
    const DifferentialExpression& expr, const BoundaryConditionSet& bc) {
  return {expr.essential_part(), bc.essential()};
}

}  // namespace birkhoff
