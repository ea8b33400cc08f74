#pragma once

#include "birkhoff/expression.hpp"
#include "birkhoff/quadrature.hpp"
#include "birkhoff/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace birkhoff {

/// A spectral parameter lambda together with its n-th root rho on the fixed
/// branch arg(rho) = arg(lambda)/n, arg(lambda) in [0, 2*pi). The branch
/// confines rho to the sectors S_0 and S_1.
struct SpectralPoint {
  Complex lambda;
  Complex rho;
  int sector = 0;  // k with pi*k/n <= arg(rho) < pi*(k+1)/n
  int n = 0;

  Complex mu(int j) const;  // rho * epsilon_j
};

SpectralPoint spectral_point(Complex lambda, int n);

/// Construction from a target rho (lambda = rho^n); used by sweeps and
/// contour searches that live in the rho plane.
SpectralPoint spectral_point_from_rho(Complex rho, int n);

/// Which of the exponentials exp(i*rho*eps_k*x) decay on [0, 1]: index k
/// decays when Im(rho*eps_k)/|rho| exceeds the margin delta. For interior
/// rays the decaying indices form the prefix 0..p-1.
struct DecayProfile {
  int p = 0;
  RealVector margins;  // Im(rho*eps_k)/|rho|
  int table_p = 0;     // tabulated value (sector/parity); equals p-1 on interior rays
  bool prefix_ok = true;
  bool neutral_present = false;
  double delta = 0.0;
  std::vector<std::string> warnings;
};

DecayProfile decay_profile(const SpectralPoint& sp, double delta = 1e-6);

/// Birkhoff fundamental system of solutions of l(y) = lambda*y. Each column
/// is fixed by exponential Cauchy data D^k y_j = (rho*eps_j)^k exp(i*rho*
/// eps_j*x) at one endpoint: x = 1 for columns whose exponential decays
/// (integrated backward), x = 0 otherwise. Anchoring a decaying column at
/// the end where it is smallest would let the growing modes swamp it; this
/// choice keeps the bracket asymptotics uniform on [0, 1]. For the bare
/// expression D^n the solutions are the exponentials exactly and both
/// anchorings coincide.
///
/// The scaled frame N(x) has entries N(k, j) = rho^{-k} D^k y_j(x)
/// exp(-i*rho*eps_j*x); it tends to the Fourier matrix (eps_j^k) as
/// rho -> infinity inside a sector. Asymptotic statements about the frame
/// are only claimed for |rho| >= kAsymptoticRadius.
///
/// Instances are immutable; evaluations are pure and safe to share across
/// threads.
class FundamentalSystem {
 public:
  enum class Backend { ExactExponential, NumericIvp };

  /// `anchor_right` overrides the per-column anchoring (true = data at
  /// x = 1); contour searches freeze it so the determinant stays analytic
  /// across a region.
  FundamentalSystem(DifferentialExpression expr, SpectralPoint sp, double rtol = 1e-10,
                    std::optional<std::vector<bool>> anchor_right = std::nullopt);

  bool anchored_at_right(int j) const { return anchor_right_.at(j); }

  Backend backend() const { return backend_; }
  const SpectralPoint& point() const { return sp_; }
  const DifferentialExpression& expression() const { return expr_; }
  int size() const { return sp_.n; }
  Complex mu(int j) const { return sp_.mu(j); }

  Matrix scaled_frame(double x) const;
  std::vector<Matrix> scaled_frames(const std::vector<double>& xs) const;

  /// Raw derivative matrix M(x) with M(k, j) = D^k y_j(x). May overflow for
  /// very large |rho|; the scaled frame is the safe representation.
  Matrix evaluate(double x) const;

  /// Scaled dual vector s(x) = N(x)^{-1} e_{n-1}. The dual system is
  /// ytilde_j(x) = s_j(x) * exp(-i*rho*eps_j*x) / rho^{n-1}.
  Vector dual_scaled(double x) const;
  Vector dual(double x) const;

  /// max over entries of |N(k, j)/eps_j^k - 1| at x; O(1/|rho|) plus an
  /// exponentially small term inside a sector.
  double bracket_deviation(double x) const;

  /// Same deviation split per solution column.
  RealVector column_bracket_deviations(double x) const;

  Complex scaled_wronskian(double x) const;  // det N(x), x-independent

 private:
  DifferentialExpression expr_;
  SpectralPoint sp_;
  Backend backend_;
  double rtol_;
  std::vector<bool> anchor_right_;
  Matrix fourier_;  // (eps_j^k), the exact frame
};

/// Values of the bounded fundamental system z_k and of the rescaled dual
/// system u_t at one point.
struct RescaledValues {
  Vector z;
  Vector u;
};

RescaledValues rescaled_systems(const FundamentalSystem& fss, const DecayProfile& profile,
                                double x);

/// Spectral condition number of the normalized Gram matrix of {z_k} in
/// L^2(0,1). Uniform boundedness in rho is the almost-orthogonality property
/// of the fundamental system.
double gram_condition(const FundamentalSystem& fss, const DecayProfile& profile,
                      int min_nodes = 64);

/// Gram condition machinery over an arbitrary set of sampled functions
/// (columns = functions evaluated on the rule's nodes).
double gram_condition_of_samples(const Matrix& samples, const QuadratureRule& rule);

}  // namespace birkhoff
