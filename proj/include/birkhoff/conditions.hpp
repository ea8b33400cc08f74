#pragma once

#include "birkhoff/expression.hpp"
#include "birkhoff/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace birkhoff {

/// A boundary condition as entered: a linear combination of derivative values
/// D^j y(end) with end in {0, 1} and 0 <= j <= n-1.
struct RawCondition {
  struct Term {
    int end = 0;
    int order = 0;
    Complex coeff;
  };

  std::vector<Term> terms;

  /// Coefficient row in the 2n-dimensional boundary-value space, laid out as
  /// (D^0 y(0), ..., D^{n-1} y(0), D^0 y(1), ..., D^{n-1} y(1)).
  Eigen::RowVectorXcd to_row(int n) const;
};

/// Conditions of one leading order j after normalization: `rank` rows whose
/// leading coefficients are the columns lead0 = b_j^0 and lead1 = b_j^1, plus
/// lower-order tail coefficients (column k of tail0/tail1 multiplies D^k
/// y(0)/y(1), k < j).
struct ConditionBlock {
  int order = 0;
  Matrix lead0;  // rank x 1
  Matrix lead1;  // rank x 1
  Matrix tail0;  // rank x order
  Matrix tail1;  // rank x order

  int rank() const { return static_cast<int>(lead0.rows()); }
};

/// Normalized (Salaff form) two-point boundary conditions: blocks grouped by
/// leading order with sum of ranks equal to n, each (b_j^0 b_j^1) of full
/// rank, and rank-2 blocks carrying the identity as leading coefficients.
class BoundaryConditionSet {
 public:
  BoundaryConditionSet(int n, std::vector<ConditionBlock> blocks);

  int order() const { return n_; }

  /// Block of leading order j (possibly of rank 0).
  const ConditionBlock& block(int j) const { return blocks_.at(j); }

  int rank_sum() const;

  bool has_tails() const;

  /// Full coefficient rows, n x 2n, blocks stacked by ascending order.
  Matrix row_matrix() const;

  /// Same set with every lower-order tail dropped.
  BoundaryConditionSet essential() const;

 private:
  int n_;
  std::vector<ConditionBlock> blocks_;
};

/// Reduces n independent raw conditions to the normalized block form by
/// Gaussian elimination on leading orders, processed from order n-1 down.
/// Pivot rows are scaled so the pivot coefficient is exactly 1; rank-2 blocks
/// are recombined to identity leading coefficients. Throws
/// DegenerateConditionsError when the conditions are linearly dependent.
BoundaryConditionSet normalize_conditions(int n, const std::vector<RawCondition>& raw);

struct ValidationReport {
  struct BlockCheck {
    int order = 0;
    int rank = 0;
    int svd_rank = 0;
    bool identity_ok = true;
  };

  int rank_sum = 0;
  bool pass = true;
  std::vector<BlockCheck> blocks;
  std::vector<std::string> failures;
};

/// Checks the normalized-form invariants (rank sum, per-block SVD rank,
/// forced identity for rank-2 blocks) and reports failures without throwing.
ValidationReport validate(const BoundaryConditionSet& bc);

/// Strips coefficients and tails: the operator D^n with leading blocks only.
std::pair<DifferentialExpression, BoundaryConditionSet> essential_part(
    const DifferentialExpression& expr, const BoundaryConditionSet& bc);

}  // namespace birkhoff
