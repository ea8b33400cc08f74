#pragma once

#include "birkhoff/conditions.hpp"
#include "birkhoff/expression.hpp"
#include "birkhoff/spectral.hpp"
#include "birkhoff/types.hpp"

#include <functional>
#include <vector>

namespace birkhoff {

/// The characteristic determinant matrix at one spectral point: entries
/// rho^{-j} U_j(z_k) (boundary forms applied to the bounded fundamental
/// system, rows scaled per leading order), its determinant, and the distance
/// to the limiting regularity-determinant matrix.
struct CharacteristicData {
  SpectralPoint sp;
  int p = 0;
  Matrix delta_matrix;
  Complex delta_value;
  Matrix limit_matrix;
  double deviation = 0.0;  // max-abs entry of delta_matrix - limit_matrix
  /// |delta| / product of row norms; the near-eigenvalue guard compares this
  /// against 1e-8.
  double margin = 0.0;
  bool near_eigenvalue = false;
};

CharacteristicData delta_matrix(const BoundaryConditionSet& bc,
                                const DifferentialExpression& expr, const SpectralPoint& sp,
                                const DecayProfile& profile);

/// Characteristic matrix A(rho): column t solves Delta * A_t = +-
/// (eps_t / 2 pi) [B_t^#] against the finite-rho boundary columns.
struct CharMatrix {
  Matrix entries;        // column t = A_t
  RealVector residuals;  // max-abs residual of each column solve
  double conditioning = 1.0;

  double frobenius() const { return entries.norm(); }
};

CharMatrix char_matrix(const BoundaryConditionSet& bc, const DifferentialExpression& expr,
                       const SpectralPoint& sp, const DecayProfile& profile);

/// Column-replacement (Cramer) evaluation of the same matrix, one
/// determinant per entry. O(n^5), kept for small orders as an independent
/// cross-check of the linear-solve path.
CharMatrix char_matrix_by_determinants(const BoundaryConditionSet& bc,
                                       const DifferentialExpression& expr,
                                       const SpectralPoint& sp, const DecayProfile& profile);

/// Limit of the characteristic matrix along interior rays:
/// Theta_p(b0,b1)^{-1} Theta_p(b1,b0) D with
/// D = diag(eps_0,...,eps_{p-1},-eps_p,...,-eps_{n-1}) / (2 pi).
Matrix char_matrix_limit(const BoundaryConditionSet& bc, int n, const DecayProfile& profile);

/// Unbounded-interval part of the Green kernel (the particular-solution
/// kernel built from decaying/growing halves of the fundamental system).
/// `x_derivative` selects D_x^m of the kernel; x = xi uses the x > xi branch.
Complex g0_eval(const DifferentialExpression& expr, const SpectralPoint& sp,
                const DecayProfile& profile, double x, double xi, int x_derivative = 0);

struct GreenEvaluation {
  double x = 0.0;
  double xi = 0.0;
  Complex g0_part;
  Complex correction_part;
  Complex total;
};

GreenEvaluation green_eval(const BoundaryConditionSet& bc, const DifferentialExpression& expr,
                           const SpectralPoint& sp, double x, double xi);

/// Batched Green-function evaluation sharing one fundamental system, one
/// characteristic matrix, and precomputed frames.
class GreenKernel {
 public:
  GreenKernel(const BoundaryConditionSet& bc, DifferentialExpression expr, SpectralPoint sp);

  const CharacteristicData& characteristic() const { return characteristic_; }
  const CharMatrix& char_matrix() const { return char_matrix_; }
  const DecayProfile& profile() const { return profile_; }
  const FundamentalSystem& fss() const { return fss_; }

  GreenEvaluation evaluate(double x, double xi) const;

  /// Kernel matrix G(x_i, xi_j) on a tensor grid.
  Matrix kernel_matrix(const std::vector<double>& xs, const std::vector<double>& xis) const;

  /// (G f)(x_i) for f sampled on quadrature nodes xi_j with weights w_j.
  Vector apply(const std::vector<double>& xs, const std::vector<double>& xis,
               const RealVector& weights, const Vector& f_values) const;

  /// (G f)(x_i) with the xi-integral split at the kernel's diagonal kink and
  /// composite Gauss-Legendre on each side; full-order accuracy for smooth f.
  Vector apply_split(const std::vector<double>& xs, const std::function<Complex(double)>& f,
                     int min_panels_per_side = 2) const;

  /// Boundary forms applied to x -> (G f)(x); all n values, unscaled.
  Vector boundary_forms_of_apply(const std::vector<double>& xis, const RealVector& weights,
                                 const Vector& f_values) const;

  /// Determinant-ratio form of the Green function (the bordered-matrix
  /// expansion); algebraically identical to evaluate().total and used as a
  /// cross-check of the assembled representation.
  Complex ratio_form(double x, double xi) const;

 private:
  struct FramePack {
    Matrix frame;
    Vector dual;  // scaled dual s(x)
  };

  FramePack pack(double x) const;
  std::vector<FramePack> packs(const std::vector<double>& xs) const;
  Complex g0_from_packs(const FramePack& at_x, double x, const FramePack& at_xi, double xi,
                        int x_derivative = 0) const;
  Vector u_from_pack(const FramePack& at_xi, double xi) const;
  Vector z_from_pack(const FramePack& at_x, double x, int derivative = 0) const;

  BoundaryConditionSet bc_;
  DifferentialExpression expr_;
  SpectralPoint sp_;
  DecayProfile profile_;
  FundamentalSystem fss_;
  CharacteristicData characteristic_;
  CharMatrix char_matrix_;
};

struct GridFunction {
  std::vector<double> xs;
  Vector values;

  double l2_norm() const;
};

/// Independent direct solver for (l - lambda) u = f, U_j(u) = 0: variation of
/// parameters over the analytic fundamental system with unit Cauchy data at
/// x = 0 plus a homogeneous correction solving the boundary system. Valid for
/// any lambda (including 0) that is not an eigenvalue.
GridFunction solve_bvp_direct(const BoundaryConditionSet& bc, const DifferentialExpression& expr,
                              Complex lambda, const std::function<Complex(double)>& f,
                              int grid_points = 2001);

struct EigenvalueHit {
  Complex rho;
  Complex lambda;
  int multiplicity = 1;
};

struct EigenvalueSearchOptions {
  double min_abs_rho = 1.0;
  int max_contour_perturbations = 5;
  double isolation_size = 5e-3;
  double ivp_rtol = 1e-10;
};

/// Zeros of the characteristic determinant inside a rho-plane rectangle, by
/// argument-principle winding counts on the boundary, subdivision until each
/// cell isolates one zero, and Newton refinement. The column rescaling is
/// frozen from the rectangle's center so the determinant stays analytic on
/// the whole rectangle.
std::vector<EigenvalueHit> eigenvalues_in(const BoundaryConditionSet& bc,
                                          const DifferentialExpression& expr, Complex corner_low,
                                          Complex corner_high,
                                          const EigenvalueSearchOptions& options = {});

/// Largest singular value of the Nystrom discretization of the Green kernel
/// with Gauss-Legendre weights; m defaults to max(64, 8 |rho|) nodes.
double resolvent_norm_estimate(const BoundaryConditionSet& bc,
                               const DifferentialExpression& expr, Complex lambda, int m = 0);

}  // namespace birkhoff
