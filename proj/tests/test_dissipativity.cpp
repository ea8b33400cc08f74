#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "birkhoff/dissipativity.hpp"
#include "birkhoff/green.hpp"
#include "birkhoff/quadrature.hpp"
#include "birkhoff/regularity.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace birkhoff;
using namespace birkhoff::testing;

namespace {

// Boundary vector Y(u) = (u(0), Du(0), ..., u(1), Du(1), ...) of a
// polynomial with complex coefficients, D = -i d/dx.
Vector boundary_vector(const std::vector<Complex>& poly, int n) {
  Vector y(2 * n);
  std::vector<Complex> current = poly;
  for (int k = 0; k < n; ++k) {
    Complex at0(0.0, 0.0), at1(0.0, 0.0);
    for (std::size_t m = 0; m < current.size(); ++m) at1 += current[m];
    if (!current.empty()) at0 = current[0];
    y[k] = at0;
    y[n + k] = at1;
    // differentiate and scale by -i
    std::vector<Complex> next;
    for (std::size_t m = 1; m < current.size(); ++m)
      next.push_back(-kImagUnit * static_cast<double>(m) * current[m]);
    current = next;
  }
  return y;
}

// Im <D^n u, u> over [0,1] by quadrature for a polynomial u.
double form_by_quadrature(const std::vector<Complex>& poly, int n) {
  std::vector<Complex> dn = poly;
  for (int k = 0; k < n; ++k) {
    std::vector<Complex> next;
    for (std::size_t m = 1; m < dn.size(); ++m)
      next.push_back(-kImagUnit * static_cast<double>(m) * dn[m]);
    dn = next;
  }
  auto eval = [](const std::vector<Complex>& c, double x) {
    Complex acc(0.0, 0.0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
  };
  const QuadratureRule rule = composite_gauss_legendre(8, 16);
  Complex inner(0.0, 0.0);
  for (int i = 0; i < rule.size(); ++i)
    inner += rule.weights[i] * eval(dn, rule.nodes[i]) * std::conj(eval(poly, rule.nodes[i]));
  return inner.imag();
}

std::vector<Complex> random_poly(SplitMix64& rng, int degree) {
  std::vector<Complex> poly(degree + 1);
  for (auto& c : poly) c = rng.complex_gaussian();
  return poly;
}

}  // namespace

TEST_CASE("lagrange form closed form") {
  for (int n : {1, 2, 3, 5, 8}) {
    const LagrangeForm form = lagrange_form(n);
    CHECK((form.h - form.h.adjoint()).cwiseAbs().maxCoeff() <= 1e-14);

    // Signature (n, n).
    Eigen::SelfAdjointEigenSolver<Matrix> eig(form.h);
    int positive = 0, negative = 0;
    for (int i = 0; i < 2 * n; ++i) {
      if (eig.eigenvalues()[i] > 0.0) ++positive;
      if (eig.eigenvalues()[i] < 0.0) ++negative;
    }
    CHECK(positive == n);
    CHECK(negative == n);

    // Quadrature identity on random polynomials.
    SplitMix64 rng(900 + n);
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<Complex> poly = random_poly(rng, n + 3);
      const Vector y = boundary_vector(poly, n);
      const double via_form = std::real((y.adjoint() * form.h * y).value());
      const double via_quadrature = form_by_quadrature(poly, n);
      CHECK(std::abs(via_form - via_quadrature) <= 1e-8 * (1.0 + std::abs(via_quadrature)));
    }
  }
}

TEST_CASE("lagrange form special values") {
  SUBCASE("n = 1 is half the difference of endpoint moduli") {
    const LagrangeForm form = lagrange_form(1);
    CHECK(std::abs(form.h(0, 0) - Complex(0.5, 0.0)) <= 1e-15);
    CHECK(std::abs(form.h(1, 1) + Complex(0.5, 0.0)) <= 1e-15);
  }
  SUBCASE("vanishes for real data with equal ends") {
    const LagrangeForm form = lagrange_form(4);
    Vector y(8);
    for (int k = 0; k < 4; ++k) {
      y[k] = Complex(1.0 + k, 0.0);
      y[4 + k] = Complex(1.0 + k, 0.0);
    }
    CHECK(std::abs((y.adjoint() * form.h * y).value()) <= 1e-14);
  }
}

TEST_CASE("verdicts for the model problems") {
  SUBCASE("dirichlet is self-adjoint") {
    const DissipativityReport report = dissipativity_test(dirichlet2());
    CHECK(report.verdict == DissipativityVerdict::SelfAdjoint);
    CHECK(report.restricted_eigenvalues.cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("cauchy data at 0 is indefinite") {
    const DissipativityReport report = dissipativity_test(cauchy_at_0());
    CHECK(report.verdict == DissipativityVerdict::NotDissipative);
    CHECK(report.margin < -1e-6);
    CHECK(report.restricted_eigenvalues.maxCoeff() > 1e-6);
  }
  SUBCASE("robin coupling Du(1) = -u(1) with u(0) = 0 is dissipative") {
    // Form value +|u(1)|^2 on the constraint subspace.
    const BoundaryConditionSet bc = normalize_conditions(
        2, {condition({{0, 0, Complex(1.0, 0.0)}}),
            condition({{1, 1, Complex(1.0, 0.0)}, {1, 0, Complex(1.0, 0.0)}})});
    const DissipativityReport report = dissipativity_test(bc);
    CHECK(report.verdict == DissipativityVerdict::Dissipative);
    CHECK(report.restricted_eigenvalues.maxCoeff() > 1e-3);
  }
  SUBCASE("Du(1) = i u(1) with u(0) = 0 is self-adjoint under D = -i d/dx") {
    const BoundaryConditionSet bc = normalize_conditions(
        2, {condition({{0, 0, Complex(1.0, 0.0)}}),
            condition({{1, 1, Complex(1.0, 0.0)}, {1, 0, Complex(0.0, -1.0)}})});
    CHECK(dissipativity_test(bc).verdict == DissipativityVerdict::SelfAdjoint);
  }
}

TEST_CASE("verdict is invariant under row recombination") {
  SplitMix64 rng(42);
  for (int n : {2, 4}) {
    for (std::uint64_t seed : {61u, 62u}) {
      const BoundaryConditionSet bc = sample_dissipative_bc(n, seed, 0.35);
      const DissipativityReport before = dissipativity_test(bc);

      Matrix t = rng.ginibre(n, n) + 3.0 * Matrix::Identity(n, n);
      const Matrix mixed_rows = t * bc.row_matrix();
      std::vector<RawCondition> mixed(n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < 2 * n; ++c)
          mixed[r].terms.push_back({c / n, c % n, mixed_rows(r, c)});
      const DissipativityReport after = dissipativity_test(normalize_conditions(n, mixed));
      CHECK(before.verdict == after.verdict);
      CHECK(std::abs(before.margin - after.margin) <= 1e-8);
    }
  }
}

TEST_CASE("sampler soundness") {
  SUBCASE("strict contraction gives a strictly positive margin") {
    const BoundaryConditionSet bc = sample_dissipative_bc(4, 17, 0.0);
    const DissipativityReport report = dissipativity_test(bc);
    CHECK(report.verdict == DissipativityVerdict::Dissipative);
    CHECK(report.margin > 1e-6);
  }
  SUBCASE("dissipative samples always pass the test") {
    for (int n : {2, 4}) {
      for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        SplitMix64 rng(seed * 31);
        const double sigma = rng.uniform();
        const BoundaryConditionSet bc = sample_dissipative_bc(n, seed, sigma);
        const DissipativityReport report = dissipativity_test(bc);
        CHECK(report.verdict != DissipativityVerdict::NotDissipative);
        CHECK(report.margin >= -1e-10);
      }
    }
  }
  SUBCASE("unitary graphs are self-adjoint") {
    for (int n : {2, 3, 4}) {
      for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const BoundaryConditionSet bc = sample_selfadjoint_bc(n, seed);
        const DissipativityReport report = dissipativity_test(bc);
        CHECK(report.verdict == DissipativityVerdict::SelfAdjoint);
        CHECK(report.restricted_eigenvalues.cwiseAbs().maxCoeff() <= 1e-10);
      }
    }
  }
  SUBCASE("samples are deterministic in the seed") {
    const BoundaryConditionSet a = sample_dissipative_bc(4, 123, 0.6);
    const BoundaryConditionSet b = sample_dissipative_bc(4, 123, 0.6);
    CHECK((a.row_matrix() - b.row_matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sampled self-adjoint problems are never irregular") {
  for (int n : {2, 4}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const BoundaryConditionSet bc = sample_selfadjoint_bc(n, seed);
      CHECK(classify(bc).classification != Classification::Irregular);
    }
  }
}

TEST_CASE("odd-order dissipative samples keep the forward determinant alive") {
  // One-sided nonvanishing is all the lower-half-plane limit provides for
  // odd orders; sampled dissipative sets must never lose it.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const BoundaryConditionSet bc = sample_dissipative_bc(3, seed, 0.5);
    const RegularityReport report = classify(bc);
    CHECK(report.classification != Classification::Irregular);
    CHECK(report.margin_forward > 1e-8);
  }
}

TEST_CASE("resolvent of sampled dissipative problems obeys the half-plane bound") {
  const DifferentialExpression expr = DifferentialExpression::essential(2);
  for (std::uint64_t seed : {5u, 6u}) {
    const BoundaryConditionSet bc = sample_dissipative_bc(2, seed, 0.4);
    for (const Complex lambda : {Complex(0.0, -4.0), Complex(-3.0, -8.0)}) {
      const double estimate = resolvent_norm_estimate(bc, expr, lambda);
      CHECK(estimate <= 1.05 / std::abs(lambda.imag()));
    }
  }
}
