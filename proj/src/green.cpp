#include "birkhoff/green.hpp"

#include "birkhoff/ode.hpp"
#include "birkhoff/quadrature.hpp"
#include "birkhoff/regularity.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace birkhoff {

namespace {

constexpr double kNearEigenvalueMargin = 1e-8;

// Scaled boundary coefficient tables: row r of A^i holds rho^{m-j} times the
// end-i coefficient of D^m in that condition (lead at m = j, tails below).
struct ScaledConditions {
  Matrix a0;
  Matrix a1;
};

ScaledConditions scaled_conditions(const BoundaryConditionSet& bc, Complex rho) {
  const int n = bc.order();
  ScaledConditions sc;
  sc.a0 = Matrix::Zero(n, n);
  sc.a1 = Matrix::Zero(n, n);
  int row = 0;
  for (int j = 0; j < n; ++j) {
    const ConditionBlock& block = bc.block(j);
    for (int i = 0; i < block.rank(); ++i, ++row) {
      sc.a0(row, j) = block.lead0(i, 0);
      sc.a1(row, j) = block.lead1(i, 0);
      Complex scale(1.0, 0.0);
      for (int m = j - 1; m >= 0; --m) {
        scale /= rho;  // rho^{m-j}
        sc.a0(row, m) = block.tail0(i, m) * scale;
        sc.a1(row, m) = block.tail1(i, m) * scale;
      }
    }
  }
  return sc;
}

// Column rescale exponentials of the bounded fundamental system. A column in
// "decay style" keeps the end-0 trace unscaled; "growth style" divides by
// exp(i mu_k), so every magnitude stays <= 1 when the style matches the sign
// of Im(mu_k).
struct Assembly {
  Matrix lhs0;  // A^0 N(0)
  Matrix lhs1;  // A^1 N(1)
  Vector e0;
  Vector e1;
  Matrix delta;
  Complex det;
  double margin = 0.0;
};

Assembly assemble_delta(const BoundaryConditionSet& bc, const FundamentalSystem& fss,
                        const std::vector<bool>& decay_style) {
  const int n = bc.order();
  const auto frames = fss.scaled_frames({0.0, 1.0});
  const ScaledConditions sc = scaled_conditions(bc, fss.point().rho);

  Assembly a;
  a.lhs0 = sc.a0 * frames[0];
  a.lhs1 = sc.a1 * frames[1];
  a.e0.resize(n);
  a.e1.resize(n);
  a.delta.resize(n, n);
  for (int k = 0; k < n; ++k) {
    const Complex mu = fss.mu(k);
    if (decay_style[k]) {
      a.e0[k] = Complex(1.0, 0.0);
      a.e1[k] = std::exp(kImagUnit * mu);
    } else {
      a.e0[k] = std::exp(-kImagUnit * mu);
      a.e1[k] = Complex(1.0, 0.0);
    }
    a.delta.col(k) = a.lhs0.col(k) * a.e0[k] + a.lhs1.col(k) * a.e1[k];
  }
  a.det = Eigen::PartialPivLU<Matrix>(a.delta).determinant();
  double row_scale = 1.0;
  for (int r = 0; r < n; ++r) row_scale *= a.delta.row(r).norm();
  a.margin = (row_scale > 1e-300) ? std::abs(a.det) / row_scale : 0.0;
  return a;
}

std::vector<bool> mask_from_profile(const DecayProfile& profile) {
  std::vector<bool> mask(profile.margins.size());
  for (int k = 0; k < profile.margins.size(); ++k) mask[k] = k < profile.p;
  return mask;
}

CharMatrix solve_char_matrix(const Assembly& a, const DecayProfile& profile, int n) {
  Matrix rhs(n, n);
  for (int t = 0; t < n; ++t) {
    const Complex factor = unity_root(n, t) / (2.0 * M_PI);
    rhs.col(t) = (t < profile.p) ? (factor * a.lhs1.col(t)).eval()
                                 : (-factor * a.lhs0.col(t)).eval();
  }
  Eigen::PartialPivLU<Matrix> lu(a.delta);
  Matrix solution = lu.solve(rhs);
  solution += lu.solve(rhs - a.delta * solution);  // one refinement pass

  CharMatrix cm;
  cm.entries = solution;
  cm.residuals.resize(n);
  const Matrix residual = a.delta * solution - rhs;
  for (int t = 0; t < n; ++t) cm.residuals[t] = residual.col(t).cwiseAbs().maxCoeff();
  const Matrix inverse = lu.inverse();
  cm.conditioning = a.delta.cwiseAbs().rowwise().sum().maxCoeff() *
                    inverse.cwiseAbs().rowwise().sum().maxCoeff();
  // The row-scaled determinant margin misses spectral points where the whole
  // matrix degenerates at once (every column pair aligning), e.g. double
  // eigenvalues of periodic problems: there the solve stays well conditioned
  // while the solution blows up like one over the distance to the spectrum.
  if (!cm.entries.allFinite() || cm.entries.norm() > 1e6 * std::max(1.0, rhs.norm()))
    throw NearEigenvalueError("near-eigenvalue: characteristic matrix unstable");
  return cm;
}

}  // namespace

CharacteristicData delta_matrix(const BoundaryConditionSet& bc,
                                const DifferentialExpression& expr, const SpectralPoint& sp,
                                const DecayProfile& profile) {
  FundamentalSystem fss(expr, sp);
  const Assembly a = assemble_delta(bc, fss, mask_from_profile(profile));
  CharacteristicData data;
  data.sp = sp;
  data.p = profile.p;
  data.delta_matrix = a.delta;
  data.delta_value = a.det;
  data.limit_matrix = theta(bc, profile.p, false).matrix.entries;
  data.deviation = (a.delta - data.limit_matrix).cwiseAbs().maxCoeff();
  data.margin = a.margin;
  data.near_eigenvalue = a.margin < kNearEigenvalueMargin;
  return data;
}

CharMatrix char_matrix(const BoundaryConditionSet& bc, const DifferentialExpression& expr,
                       const SpectralPoint& sp, const DecayProfile& profile) {
  FundamentalSystem fss(expr, sp);
  const Assembly a = assemble_delta(bc, fss, mask_from_profile(profile));
  if (a.margin < kNearEigenvalueMargin)
    throw NearEigenvalueError("near-eigenvalue: characteristic matrix unstable");
  return solve_char_matrix(a, profile, bc.order());
}

CharMatrix char_matrix_by_determinants(const BoundaryConditionSet& bc,
                                       const DifferentialExpression& expr,
                                       const SpectralPoint& sp, const DecayProfile& profile) {
  const int n = bc.order();
  if (n > 4)
    throw std::invalid_argument("determinant evaluation is kept for orders up to 4");
  FundamentalSystem fss(expr, sp);
  const Assembly a = assemble_delta(bc, fss, mask_from_profile(profile));
  if (a.margin < kNearEigenvalueMargin)
    throw NearEigenvalueError("near-eigenvalue: characteristic matrix unstable");

  CharMatrix cm;
  cm.entries.resize(n, n);
  cm.residuals = RealVector::Zero(n);
  for (int t = 0; t < n; ++t) {
    const Complex factor = unity_root(n, t) / (2.0 * M_PI);
    const Vector rhs = (t < profile.p) ? Vector(factor * a.lhs1.col(t))
                                       : Vector(-factor * a.lhs0.col(t));
    for (int k = 0; k < n; ++k) {
      Matrix replaced = a.delta;
      replaced.col(k) = rhs;
      cm.entries(k, t) = Eigen::PartialPivLU<Matrix>(replaced).determinant() / a.det;
    }
    cm.residuals[t] = (a.delta * cm.entries.col(t) - rhs).cwiseAbs().maxCoeff();
  }
  return cm;
}

Matrix char_matrix_limit(const BoundaryConditionSet& bc, int n, const DecayProfile& profile) {
  const ThetaResult forward = theta(bc, profile.p, false);
  if (forward.normalized_margin <= kDefaultThetaTolerance)
    throw SingularMatrixError("problem not regular at this p");
  const ThetaResult swapped = theta(bc, profile.p, true);
  Matrix scaled = swapped.matrix.entries;
  for (int t = 0; t < n; ++t) {
    const Complex d = unity_root(n, t) / (2.0 * M_PI);
    scaled.col(t) *= (t < profile.p) ? d : -d;
  }
  return Eigen::PartialPivLU<Matrix>(forward.matrix.entries).solve(scaled);
}

Complex g0_eval(const DifferentialExpression& expr, const SpectralPoint& sp,
                const DecayProfile& profile, double x, double xi, int x_derivative) {
  FundamentalSystem fss(expr, sp);
  const Matrix frame_x = fss.scaled_frame(x);
  const Vector dual_xi = fss.dual_scaled(xi);
  const int n = sp.n;
  const Complex rho_scale = std::pow(sp.rho, x_derivative + 1 - n);
  Complex acc(0.0, 0.0);
  const bool upper = x >= xi;
  for (int k = 0; k < n; ++k) {
    if (upper != (k < profile.p)) continue;
    acc += frame_x(x_derivative, k) * dual_xi[k] * std::exp(kImagUnit * sp.mu(k) * (x - xi));
  }
  return (upper ? kImagUnit : -kImagUnit) * rho_scale * acc;
}

GreenKernel::GreenKernel(const BoundaryConditionSet& bc, DifferentialExpression expr,
                         SpectralPoint sp)
    : bc_(bc),
      expr_(std::move(expr)),
      sp_(sp),
      profile_(decay_profile(sp)),
      fss_(expr_, sp_),
      characteristic_(delta_matrix(bc_, expr_, sp_, profile_)) {
  if (characteristic_.near_eigenvalue)
    throw NearEigenvalueError("near-eigenvalue: Green function unstable");
  const Assembly a = assemble_delta(bc_, fss_, mask_from_profile(profile_));
  char_matrix_ = solve_char_matrix(a, profile_, bc_.order());
}

GreenKernel::FramePack GreenKernel::pack(double x) const {
  FramePack p;
  p.frame = fss_.scaled_frame(x);
  Eigen::FullPivLU<Matrix> lu(p.frame);
  if (!lu.isInvertible()) throw SingularMatrixError("fundamental system frame is singular");
  Vector rhs = Vector::Zero(sp_.n);
  rhs[sp_.n - 1] = Complex(1.0, 0.0);
  p.dual = lu.solve(rhs);
  return p;
}

std::vector<GreenKernel::FramePack> GreenKernel::packs(const std::vector<double>& xs) const {
  const auto frames = fss_.scaled_frames(xs);
  std::vector<FramePack> result(xs.size());
  Vector rhs = Vector::Zero(sp_.n);
  rhs[sp_.n - 1] = Complex(1.0, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    result[i].frame = frames[i];
    Eigen::FullPivLU<Matrix> lu(frames[i]);
    if (!lu.isInvertible()) throw SingularMatrixError("fundamental system frame is singular");
    result[i].dual = lu.solve(rhs);
  }
  return result;
}

Complex GreenKernel::g0_from_packs(const FramePack& at_x, double x, const FramePack& at_xi,
                                   double xi, int x_derivative) const {
  const int n = sp_.n;
  const Complex scale = std::pow(sp_.rho, x_derivative + 1 - n);
  const bool upper = x >= xi;
  Complex acc(0.0, 0.0);
  for (int k = 0; k < n; ++k) {
    if (upper != (k < profile_.p)) continue;
    acc += at_x.frame(x_derivative, k) * at_xi.dual[k] *
           std::exp(kImagUnit * sp_.mu(k) * (x - xi));
  }
  return (upper ? kImagUnit : -kImagUnit) * scale * acc;
}

Vector GreenKernel::u_from_pack(const FramePack& at_xi, double xi) const {
  const int n = sp_.n;
  Vector u(n);
  for (int t = 0; t < n; ++t) {
    const Complex eps_pow = std::pow(unity_root(n, t), n - 1);
    const Complex mu = sp_.mu(t);
    const Complex osc = (t < profile_.p) ? std::exp(kImagUnit * mu * (1.0 - xi))
                                         : std::exp(-kImagUnit * mu * xi);
    u[t] = static_cast<double>(n) * eps_pow * at_xi.dual[t] * osc;
  }
  return u;
}

Vector GreenKernel::z_from_pack(const FramePack& at_x, double x, int derivative) const {
  const int n = sp_.n;
  const Complex rho_pow = std::pow(sp_.rho, derivative);
  Vector z(n);
  for (int k = 0; k < n; ++k) {
    const Complex mu = sp_.mu(k);
    const Complex osc = (k < profile_.p) ? std::exp(kImagUnit * mu * x)
                                         : std::exp(kImagUnit * mu * (x - 1.0));
    z[k] = rho_pow * at_x.frame(derivative, k) * osc;
  }
  return z;
}

GreenEvaluation GreenKernel::evaluate(double x, double xi) const {
  const FramePack px = pack(x);
  const FramePack pxi = pack(xi);
  GreenEvaluation out;
  out.x = x;
  out.xi = xi;
  out.g0_part = g0_from_packs(px, x, pxi, xi);
  const Complex factor =
      Complex(0.0, -2.0 * M_PI) / (static_cast<double>(sp_.n) * std::pow(sp_.rho, sp_.n - 1));
  const Vector z = z_from_pack(px, x);
  const Vector u = u_from_pack(pxi, xi);
  out.correction_part = factor * (z.transpose() * char_matrix_.entries * u).value();
  out.total = out.g0_part + out.correction_part;
  return out;
}

Matrix GreenKernel::kernel_matrix(const std::vector<double>& xs,
                                  const std::vector<double>& xis) const {
  const auto px = packs(xs);
  const auto pxi = packs(xis);
  const Complex factor =
      Complex(0.0, -2.0 * M_PI) / (static_cast<double>(sp_.n) * std::pow(sp_.rho, sp_.n - 1));

  Matrix z_values(sp_.n, xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) z_values.col(i) = z_from_pack(px[i], xs[i]);
  Matrix u_values(sp_.n, xis.size());
  for (std::size_t j = 0; j < xis.size(); ++j) u_values.col(j) = u_from_pack(pxi[j], xis[j]);

  Matrix correction =
      factor * (z_values.transpose() * char_matrix_.entries * u_values);

  Matrix kernel(xs.size(), xis.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xis.size(); ++j)
      kernel(i, j) = g0_from_packs(px[i], xs[i], pxi[j], xis[j]) + correction(i, j);
  return kernel;
}

Vector GreenKernel::apply(const std::vector<double>& xs, const std::vector<double>& xis,
                          const RealVector& weights, const Vector& f_values) const {
  const Matrix kernel = kernel_matrix(xs, xis);
  Vector weighted = f_values;
  for (int j = 0; j < weighted.size(); ++j) weighted[j] *= weights[j];
  return kernel * weighted;
}

Vector GreenKernel::apply_split(const std::vector<double>& xs,
                                const std::function<Complex(double)>& f,
                                int min_panels_per_side) const {
  const double r = std::abs(sp_.rho);
  struct Piece {
    std::size_t first = 0;
    std::size_t count = 0;
  };
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<Piece> pieces(xs.size());

  for (std::size_t i = 0; i < xs.size(); ++i) {
    pieces[i].first = nodes.size();
    for (int side = 0; side < 2; ++side) {
      const double a = (side == 0) ? 0.0 : xs[i];
      const double b = (side == 0) ? xs[i] : 1.0;
      if (b - a < 1e-14) continue;
      const int panels = std::max(
          min_panels_per_side, static_cast<int>(std::ceil(r * (b - a) / 4.0)));
      const QuadratureRule rule = composite_gauss_legendre(panels, 16);
      for (int q = 0; q < rule.size(); ++q) {
        nodes.push_back(a + (b - a) * rule.nodes[q]);
        weights.push_back((b - a) * rule.weights[q]);
      }
    }
    pieces[i].count = nodes.size() - pieces[i].first;
  }

  const auto pxi = packs(nodes);
  const auto px = packs(xs);
  Matrix u_values(sp_.n, nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) u_values.col(j) = u_from_pack(pxi[j], nodes[j]);
  const Complex factor =
      Complex(0.0, -2.0 * M_PI) / (static_cast<double>(sp_.n) * std::pow(sp_.rho, sp_.n - 1));

  Vector result(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vector z = z_from_pack(px[i], xs[i]);
    const Vector corr_row = (z.transpose() * char_matrix_.entries * u_values)
                                .transpose()
                                .segment(pieces[i].first, pieces[i].count);
    Complex acc(0.0, 0.0);
    for (std::size_t q = 0; q < pieces[i].count; ++q) {
      const std::size_t idx = pieces[i].first + q;
      const Complex kernel =
          g0_from_packs(px[i], xs[i], pxi[idx], nodes[idx]) + factor * corr_row[q];
      acc += weights[idx] * kernel * f(nodes[idx]);
    }
    result[i] = acc;
  }
  return result;
}

Vector GreenKernel::boundary_forms_of_apply(const std::vector<double>& xis,
                                            const RealVector& weights,
                                            const Vector& f_values) const {
  const int n = sp_.n;
  const auto pxi = packs(xis);
  const FramePack p0 = pack(0.0);
  const FramePack p1 = pack(1.0);
  const Complex factor =
      Complex(0.0, -2.0 * M_PI) / (static_cast<double>(n) * std::pow(sp_.rho, n - 1));

  Matrix u_values(n, xis.size());
  for (std::size_t j = 0; j < xis.size(); ++j) u_values.col(j) = u_from_pack(pxi[j], xis[j]);

  // D^m (G f)(end) for m = 0..n-1 and both ends.
  Matrix derivs0(n, 1), derivs1(n, 1);
  Vector weighted = f_values;
  for (int j = 0; j < weighted.size(); ++j) weighted[j] *= weights[j];
  for (int m = 0; m < n; ++m) {
    Complex acc0(0.0, 0.0), acc1(0.0, 0.0);
    const Vector z0 = z_from_pack(p0, 0.0, m);
    const Vector z1 = z_from_pack(p1, 1.0, m);
    const Vector corr0 = (z0.transpose() * char_matrix_.entries * u_values).transpose();
    const Vector corr1 = (z1.transpose() * char_matrix_.entries * u_values).transpose();
    for (std::size_t j = 0; j < xis.size(); ++j) {
      acc0 += (g0_from_packs(p0, 0.0, pxi[j], xis[j], m) + factor * corr0[j]) * weighted[j];
      acc1 += (g0_from_packs(p1, 1.0, pxi[j], xis[j], m) + factor * corr1[j]) * weighted[j];
    }
    derivs0(m, 0) = acc0;
    derivs1(m, 0) = acc1;
  }

  Vector forms(n);
  int row = 0;
  for (int j = 0; j < n; ++j) {
    const ConditionBlock& block = bc_.block(j);
    for (int i = 0; i < block.rank(); ++i, ++row) {
      Complex acc = block.lead0(i, 0) * derivs0(j, 0) + block.lead1(i, 0) * derivs1(j, 0);
      for (int m = 0; m < j; ++m)
        acc += block.tail0(i, m) * derivs0(m, 0) + block.tail1(i, m) * derivs1(m, 0);
      forms[row] = acc;
    }
  }
  return forms;
}

Complex GreenKernel::ratio_form(double x, double xi) const {
  const int n = sp_.n;
  const Assembly a = assemble_delta(bc_, fss_, mask_from_profile(profile_));
  const FramePack px = pack(x);
  const FramePack pxi = pack(xi);

  const Complex rho_pow = std::pow(sp_.rho, n - 1);
  const Complex g = g0_from_packs(px, x, pxi, xi) * static_cast<double>(n) * rho_pow /
                    kImagUnit;
  const Vector z = z_from_pack(px, x);
  const Vector u = u_from_pack(pxi, xi);

  // V_j = rho^{-j} U_j applied over the first argument of the scaled kernel.
  Vector v = Vector::Zero(n);
  for (int k = 0; k < n; ++k) {
    const Complex eps_u = unity_root(n, k) * u[k];
    if (k < profile_.p)
      v += a.lhs1.col(k) * eps_u;
    else
      v -= a.lhs0.col(k) * eps_u;
  }

  Matrix bordered(n + 1, n + 1);
  bordered(0, n) = g;
  for (int k = 0; k < n; ++k) bordered(0, k) = z[k];
  bordered.block(1, 0, n, n) = a.delta;
  bordered.block(1, n, n, 1) = v;

  const Complex numerator = kImagUnit * Eigen::PartialPivLU<Matrix>(bordered).determinant();
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  return sign * numerator / (static_cast<double>(n) * rho_pow * a.det);
}

GreenEvaluation green_eval(const BoundaryConditionSet& bc, const DifferentialExpression& expr,
                           const SpectralPoint& sp, double x, double xi) {
  GreenKernel kernel(bc, expr, sp);
  return kernel.evaluate(x, xi);
}

double GridFunction::l2_norm() const {
  // Trapezoid on the stored grid.
  double acc = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double h = xs[i] - xs[i - 1];
    acc += 0.5 * h * (std::norm(values[i]) + std::norm(values[i - 1]));
  }
  return std::sqrt(acc);
}

namespace {

// Cumulative integral of uniformly sampled values, fourth order: composite
// Simpson for even prefixes, one 3-point end-correction step for odd ones.
std::vector<Complex> cumulative_integral(const Vector& g, double h) {
  const int m = static_cast<int>(g.size());
  std::vector<Complex> acc(m);
  acc[0] = Complex(0.0, 0.0);
  if (m > 1) acc[1] = h / 12.0 * (5.0 * g[0] + 8.0 * g[1] - g[2]);
  for (int i = 2; i < m; ++i)
    acc[i] = acc[i - 2] + h / 3.0 * (g[i - 2] + 4.0 * g[i - 1] + g[i]);
  return acc;
}

}  // namespace

GridFunction solve_bvp_direct(const BoundaryConditionSet& bc, const DifferentialExpression& expr,
                              Complex lambda, const std::function<Complex(double)>& f,
                              int grid_points) {
  const int n = bc.order();
  if (expr.order() != n) throw std::invalid_argument("expression and conditions orders differ");
  if (grid_points < 9 || grid_points % 2 == 0)
    throw std::invalid_argument("grid size must be odd and at least 9");

  std::vector<double> xs(grid_points);
  const double h = 1.0 / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) xs[i] = i * h;

  // Analytic fundamental system: D^k y_j(0) = delta_{jk}. Safe for any
  // lambda, including 0 where the exponential system degenerates.
  std::vector<Matrix> m_values(grid_points, Matrix(n, n));
  for (int j = 0; j < n; ++j) {
    ComplexOde rhs = [&](const ComplexState& v, ComplexState& dv, double x) {
      for (int k = 0; k < n - 1; ++k) dv[k] = kImagUnit * v[k + 1];
      Complex forcing = lambda * v[0];
      for (int k = 0; k <= n - 2; ++k) {
        const Complex pk = expr.coefficient(k, x);
        if (pk != Complex(0.0, 0.0)) forcing -= pk * v[k];
      }
      dv[n - 1] = kImagUnit * forcing;
    };
    ComplexState v0(n, Complex(0.0, 0.0));
    v0[j] = Complex(1.0, 0.0);
    const auto states = integrate_at(rhs, std::move(v0), xs, 1e-12, 1e-14);
    for (int i = 0; i < grid_points; ++i)
      for (int k = 0; k < n; ++k) m_values[i](k, j) = states[i][k];
  }

  // Duals and the cumulative variation-of-parameters integrals.
  Matrix g_samples(grid_points, n);  // ytilde_j(xi) f(xi)
  Vector rhs_unit = Vector::Zero(n);
  rhs_unit[n - 1] = Complex(1.0, 0.0);
  for (int i = 0; i < grid_points; ++i) {
    Eigen::FullPivLU<Matrix> lu(m_values[i]);
    if (!lu.isInvertible()) throw SingularMatrixError("fundamental matrix singular on grid");
    const Vector dual = lu.solve(rhs_unit);
    const Complex fi = f(xs[i]);
    for (int j = 0; j < n; ++j) g_samples(i, j) = dual[j] * fi;
  }

  std::vector<std::vector<Complex>> cumulative(n);
  for (int j = 0; j < n; ++j) cumulative[j] = cumulative_integral(g_samples.col(j), h);

  GridFunction u;
  u.xs = xs;
  u.values.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    Complex acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) acc += m_values[i](0, j) * cumulative[j][i];
    u.values[i] = kImagUnit * acc;
  }

  // Homogeneous correction: U_r(u_part + sum c_k y_k) = 0. The particular
  // solution vanishes with all derivatives at x = 0, so only end-1 terms of
  // the boundary forms see it.
  Vector dpart_at_1(n);
  for (int m = 0; m < n; ++m) {
    Complex acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) acc += m_values[grid_points - 1](m, j) * cumulative[j].back();
    dpart_at_1[m] = kImagUnit * acc;
  }

  Matrix boundary(n, n);
  Vector rhs_vec(n);
  int row = 0;
  for (int j = 0; j < n; ++j) {
    const ConditionBlock& block = bc.block(j);
    for (int i = 0; i < block.rank(); ++i, ++row) {
      for (int k = 0; k < n; ++k) {
        // M(0) is the identity, so the end-0 part of U_r(y_k) collapses to
        // the coefficient of D^k.
        Complex acc = (k == j) ? block.lead0(i, 0) : Complex(0.0, 0.0);
        if (k < j) acc += block.tail0(i, k);
        acc += block.lead1(i, 0) * m_values[grid_points - 1](j, k);
        for (int m = 0; m < j; ++m)
          acc += block.tail1(i, m) * m_values[grid_points - 1](m, k);
        boundary(row, k) = acc;
      }
      Complex acc = block.lead1(i, 0) * dpart_at_1[j];
      for (int m = 0; m < j; ++m) acc += block.tail1(i, m) * dpart_at_1[m];
      rhs_vec[row] = -acc;
    }
  }

  Eigen::FullPivLU<Matrix> lu(boundary);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) throw SingularMatrixError("singular boundary system");
  const Vector c = lu.solve(rhs_vec);
  for (int i = 0; i < grid_points; ++i) {
    Complex acc(0.0, 0.0);
    for (int k = 0; k < n; ++k) acc += c[k] * m_values[i](0, k);
    u.values[i] += acc;
  }
  return u;
}

namespace {

struct DeltaEvaluator {
  const BoundaryConditionSet& bc;
  const DifferentialExpression& expr;
  std::vector<bool> mask;
  double rtol;

  struct Result {
    Complex det;
    double margin;
  };

  Result operator()(Complex rho) const {
    const SpectralPoint sp = spectral_point_from_rho(rho, bc.order());
    // The anchoring must stay frozen together with the rescale mask so the
    // determinant is one analytic function over the whole search region.
    FundamentalSystem fss(expr, sp, rtol, mask);
    const Assembly a = assemble_delta(bc, fss, mask);
    return {a.det, a.margin};
  }
};

struct ContourZeroError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Net phase advance of delta along the segment [a, b], subdividing until
// consecutive samples differ by less than pi/2.
double phase_advance(const DeltaEvaluator& eval, Complex a, Complex b, Complex fa, Complex fb,
                     int depth) {
  const double diff = std::arg(fb / fa);
  if (std::abs(diff) < M_PI / 2.0) return diff;
  if (depth >= 48) throw ContourZeroError("phase unresolved on contour");
  const Complex mid = 0.5 * (a + b);
  const auto fm = eval(mid);
  if (fm.margin < 1e-13) throw ContourZeroError("zero on contour");
  return phase_advance(eval, a, mid, fa, fm.det, depth + 1) +
         phase_advance(eval, mid, b, fm.det, fb, depth + 1);
}

int rectangle_winding(const DeltaEvaluator& eval, Complex lo, Complex hi) {
  const Complex corners[5] = {lo, Complex(hi.real(), lo.imag()), hi,
                              Complex(lo.real(), hi.imag()), lo};
  double advance = 0.0;
  for (int edge = 0; edge < 4; ++edge) {
    const Complex a = corners[edge];
    const Complex b = corners[edge + 1];
    const int segments = 8;
    Complex prev = a;
    auto fprev = eval(prev);
    if (fprev.margin < 1e-13) throw ContourZeroError("zero on contour");
    for (int s = 1; s <= segments; ++s) {
      const Complex next = a + (b - a) * (static_cast<double>(s) / segments);
      const auto fnext = eval(next);
      if (fnext.margin < 1e-13) throw ContourZeroError("zero on contour");
      advance += phase_advance(eval, prev, next, fprev.det, fnext.det, 0);
      prev = next;
      fprev = fnext;
    }
  }
  const double winding = advance / (2.0 * M_PI);
  const int rounded = static_cast<int>(std::lround(winding));
  if (std::abs(winding - rounded) > 0.25)
    throw ContourZeroError("non-integer winding number");
  return rounded;
}

Complex newton_refine(const DeltaEvaluator& eval, Complex start) {
  Complex rho = start;
  const double initial_abs = std::abs(eval(start).det);
  for (int iter = 0; iter < 120; ++iter) {
    const auto f = eval(rho);
    if (f.margin <= 1e-10) return rho;
    const double h = 1e-6 * (1.0 + std::abs(rho));
    const Complex fp = (eval(rho + h).det - eval(rho - h).det) / (2.0 * h);
    if (fp == Complex(0.0, 0.0)) break;
    const Complex step = f.det / fp;
    rho -= step;
    // At a multiple zero every row of the matrix vanishes together with the
    // determinant, so the row-scaled margin never drops; accept once the
    // iteration is stationary and the determinant has collapsed.
    if (std::abs(step) < 1e-12 * (1.0 + std::abs(rho))) {
      const auto refined = eval(rho);
      if (refined.margin <= 1e-8 || std::abs(refined.det) <= 1e-6 * initial_abs) return rho;
      break;
    }
  }
  throw NearEigenvalueError("Newton refinement failed to converge to a determinant zero");
}

void subdivide(const DeltaEvaluator& eval, Complex lo, Complex hi, int winding,
               const EigenvalueSearchOptions& options, std::vector<EigenvalueHit>& hits,
               int depth) {
  if (winding == 0) return;
  const Complex center = 0.5 * (lo + hi);
  const double diag = std::abs(hi - lo);
  if (winding >= 1 && diag < options.isolation_size) {
    const Complex rho = newton_refine(eval, center);
    const SpectralPoint sp = spectral_point_from_rho(rho, eval.bc.order());
    hits.push_back({rho, sp.lambda, winding});
    return;
  }
  if (depth > 60) throw NearEigenvalueError("eigenvalue subdivision exceeded depth limit");

  // Split along the longer edge; nudge the split point when a zero happens to
  // sit on the cut.
  const bool split_re = (hi.real() - lo.real()) >= (hi.imag() - lo.imag());
  for (int attempt = 0; attempt < 4; ++attempt) {
    const double shift = attempt * 0.037;
    Complex mid_lo, mid_hi;
    if (split_re) {
      const double cut = lo.real() + (0.5 + shift) * (hi.real() - lo.real());
      mid_lo = Complex(cut, lo.imag());
      mid_hi = Complex(cut, hi.imag());
    } else {
      const double cut = lo.imag() + (0.5 + shift) * (hi.imag() - lo.imag());
      mid_lo = Complex(lo.real(), cut);
      mid_hi = Complex(hi.real(), cut);
    }
    try {
      const int w1 = rectangle_winding(eval, lo, mid_hi);
      const int w2 = rectangle_winding(eval, mid_lo, hi);
      if (w1 + w2 != winding) {
        if (attempt == 3) throw NearEigenvalueError("winding mismatch after subdivision");
        continue;
      }
      subdivide(eval, lo, mid_hi, w1, options, hits, depth + 1);
      subdivide(eval, mid_lo, hi, w2, options, hits, depth + 1);
      return;
    } catch (const ContourZeroError&) {
      if (attempt == 3) throw NearEigenvalueError("could not find a zero-free subdivision cut");
    }
  }
}

}  // namespace

std::vector<EigenvalueHit> eigenvalues_in(const BoundaryConditionSet& bc,
                                          const DifferentialExpression& expr, Complex corner_low,
                                          Complex corner_high,
                                          const EigenvalueSearchOptions& options) {
  if (!(corner_low.real() < corner_high.real()) || !(corner_low.imag() < corner_high.imag()))
    throw std::invalid_argument("rectangle corners must satisfy low < high componentwise");
  if (corner_low.real() <= 0.0 && corner_high.real() >= 0.0 && corner_low.imag() <= 0.0 &&
      corner_high.imag() >= 0.0)
    throw std::invalid_argument("search rectangle must avoid rho = 0");

  const Complex center = 0.5 * (corner_low + corner_high);
  const int n = bc.order();
  std::vector<bool> mask(n);
  for (int k = 0; k < n; ++k) mask[k] = std::imag(center * unity_root(n, k)) > 0.0;
  DeltaEvaluator eval{bc, expr, mask, options.ivp_rtol};

  // Perturb the rectangle slightly when a determinant zero sits on the
  // contour itself.
  Complex lo = corner_low, hi = corner_high;
  std::vector<EigenvalueHit> hits;
  for (int attempt = 0;; ++attempt) {
    try {
      const int winding = rectangle_winding(eval, lo, hi);
      subdivide(eval, lo, hi, winding, options, hits, 0);
      break;
    } catch (const ContourZeroError& e) {
      if (attempt >= options.max_contour_perturbations)
        throw NearEigenvalueError(std::string("contour search failed: ") + e.what());
      const Complex stretch = 1.7e-3 * (attempt + 1) * (hi - lo);
      lo -= stretch;
      hi += stretch;
      hits.clear();
    }
  }

  // Merge duplicates, drop hits below the |rho| floor, sort by magnitude.
  std::vector<EigenvalueHit> result;
  for (const auto& hit : hits) {
    if (std::abs(hit.rho) < options.min_abs_rho) continue;
    bool merged = false;
    for (auto& existing : result) {
      if (std::abs(existing.rho - hit.rho) < 1e-6 * (1.0 + std::abs(hit.rho))) {
        // Winding counts partition over the subdivision, so two cells that
        // refine onto one point (a zero sitting on a cut) contribute their
        // counts additively.
        existing.multiplicity += hit.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) result.push_back(hit);
  }
  std::sort(result.begin(), result.end(), [](const EigenvalueHit& a, const EigenvalueHit& b) {
    return std::abs(a.rho) < std::abs(b.rho) ||
           (std::abs(a.rho) == std::abs(b.rho) && std::arg(a.rho) < std::arg(b.rho));
  });
  return result;
}

double resolvent_norm_estimate(const BoundaryConditionSet& bc,
                               const DifferentialExpression& expr, Complex lambda, int m) {
  const SpectralPoint sp = spectral_point(lambda, bc.order());
  if (m <= 0) m = std::max(64, static_cast<int>(std::ceil(8.0 * std::abs(sp.rho))));
  const QuadratureRule rule = composite_gauss_legendre((m + 15) / 16, 16);

  GreenKernel kernel(bc, expr, sp);
  std::vector<double> nodes(rule.nodes.data(), rule.nodes.data() + rule.size());
  Matrix k = kernel.kernel_matrix(nodes, nodes);
  for (int i = 0; i < rule.size(); ++i)
    for (int j = 0; j < rule.size(); ++j)
      k(i, j) *= std::sqrt(rule.weights[i]) * std::sqrt(rule.weights[j]);

  // Largest singular value by power iteration on K* K.
  Vector v = Vector::Ones(rule.size());
  for (int i = 0; i < rule.size(); ++i) v[i] += 1e-3 * std::sin(1.0 + i);
  v /= v.norm();
  double sigma = 0.0;
  for (int iter = 0; iter < 400; ++iter) {
    Vector w = k * v;
    Vector next = k.adjoint() * w;
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    const double estimate = (k * next).norm();
    if (iter > 4 && std::abs(estimate - sigma) <= 1e-9 * estimate) return estimate;
    sigma = estimate;
    v = next;
  }
  return sigma;
}

}  // namespace birkhoff
