#pragma once

#include "birkhoff/conditions.hpp"
#include "birkhoff/expression.hpp"
#include "birkhoff/green.hpp"
#include "birkhoff/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace birkhoff {

/// One row of a ray sweep: the characteristic matrix and its distance to the
/// limit at a fixed |rho| on the ray arg(lambda) = const.
struct RaySweepRow {
  double rho_abs = 0.0;
  double rho_arg = 0.0;
  Matrix a;
  double dev_a = 0.0;      // Frobenius distance to the limit matrix
  double dev_delta = 0.0;  // max-abs distance of Delta to Theta_p
  RealVector margins;      // per-index decay margins Im(rho eps_k)/|rho|
  RealVector bracket_dev;  // per-column bracket deviation over both endpoints
  double gram = 0.0;
  double resolvent = -1.0;  // -1 when not computed
  bool near_eigenvalue = false;
};

struct RaySweepOptions {
  double arg_lambda = 1.5 * M_PI;
  bool with_gram = true;
  bool with_resolvent = true;
  int resolvent_max_nodes = 1024;
};

struct RaySweepResult {
  Matrix a_limit;
  std::vector<RaySweepRow> rows;
  double fitted_order = 0.0;  // slope of log(dev_a) against log(1/|rho|)
  bool fit_valid = false;
};

/// Sweeps |rho| along the ray arg(rho) = arg_lambda / n. Throws
/// SingularMatrixError when the problem is not regular at the ray's decay
/// count (the limit matrix does not exist).
RaySweepResult ray_sweep(const BoundaryConditionSet& bc, const DifferentialExpression& expr,
                         const std::vector<double>& rho_abs_grid,
                         const RaySweepOptions& options = {});

/// Seeded verification campaign: samples dissipative (or self-adjoint)
/// condition sets per order and classifies each one. Irregular samples are
/// counterexamples and are reported with their problem documents.
struct KreinConfig {
  std::vector<int> orders = {2, 4};
  int samples_per_order = 200;
  std::uint64_t seed = 1;
  bool selfadjoint = false;
  double tol_theta = kDefaultThetaTolerance;
};

struct KreinSample {
  int n = 0;
  int index = 0;
  double sigma = 0.0;
  double theta_margin = 0.0;
  bool irregular = false;
};

struct KreinOrderSummary {
  int n = 0;
  int samples = 0;
  int irregular = 0;
  double min_margin = 0.0;
  /// Margin histogram bins: <=1e-8, (1e-8,1e-6], (1e-6,1e-4], (1e-4,1e-2], >1e-2.
  std::array<int, 5> histogram{};
};

struct KreinResult {
  KreinConfig config;
  std::vector<KreinOrderSummary> orders;
  std::vector<KreinSample> samples;
  std::vector<BoundaryConditionSet> counterexamples;
};

KreinResult verify_krein(const KreinConfig& config);

/// Runs fn(i) for i in [0, count) over the worker pool capped by the
/// BSPEC_THREADS environment variable (default: hardware concurrency).
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace birkhoff
