#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "birkhoff/regularity.hpp"
#include "test_helpers.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

using namespace birkhoff;
using namespace birkhoff::testing;

TEST_CASE("unity roots") {
  CHECK(unity_root(4, 0) == Complex(1.0, 0.0));
  CHECK(std::abs(unity_root(2, 1) - Complex(-1.0, 0.0)) < 1e-15);
  CHECK(std::abs(unity_root(4, 1) - Complex(0.0, 1.0)) < 1e-15);
  CHECK_THROWS_AS(unity_root(4, 4), std::invalid_argument);
}

TEST_CASE("b columns for the model problems") {
  const BoundaryConditionSet dirichlet = dirichlet2();
  for (int k = 0; k < 2; ++k) {
    const Vector b0 = b_column(dirichlet, 0, k);
    const Vector b1 = b_column(dirichlet, 1, k);
    CHECK(std::abs(b0[0] - Complex(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(b0[1]) < 1e-15);
    CHECK(std::abs(b1[0]) < 1e-15);
    CHECK(std::abs(b1[1] - Complex(1.0, 0.0)) < 1e-15);
  }
  const BoundaryConditionSet periodic = periodic2();
  const Vector b11 = b_column(periodic, 1, 1);
  CHECK(std::abs(b11[0] - Complex(-1.0, 0.0)) < 1e-15);
  CHECK(std::abs(b11[1] - Complex(1.0, 0.0)) < 1e-15);
}

TEST_CASE("theta values of the model problems") {
  SUBCASE("dirichlet") {
    const ThetaResult t = theta(dirichlet2(), 1, false);
    CHECK(std::abs(t.value - Complex(1.0, 0.0)) < 1e-12);
    CHECK((t.matrix.entries - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("cauchy at 0 vanishes") {
    const ThetaResult t = theta(cauchy_at_0(), 1, false);
    CHECK(std::abs(t.value) < 1e-12);
    CHECK(t.normalized_margin < 1e-12);
  }
  SUBCASE("periodic") {
    const ThetaResult t = theta(periodic2(), 1, false);
    CHECK(std::abs(t.value - Complex(2.0, 0.0)) < 1e-12);
  }
}

TEST_CASE("strong regularity polynomials") {
  SUBCASE("dirichlet has roots +-1") {
    const StrongRegularityPolynomial f = strong_regularity_polynomial(dirichlet2());
    CHECK(std::abs(f.c2 - Complex(-1.0, 0.0)) < 1e-12);
    CHECK(std::abs(f.c1) < 1e-12);
    CHECK(std::abs(f.c0 - Complex(1.0, 0.0)) < 1e-12);
    CHECK(f.two_simple_roots);
    REQUIRE(f.roots.size() == 2);
    const double r0 = std::abs(f.roots[0] - Complex(1.0, 0.0));
    const double r1 = std::abs(f.roots[0] - Complex(-1.0, 0.0));
    CHECK(std::min(r0, r1) < 1e-10);
  }
  SUBCASE("periodic has a double root at 1") {
    const StrongRegularityPolynomial f = strong_regularity_polynomial(periodic2());
    // 2(1-s)^2 = 2 - 4s + 2s^2
    CHECK(std::abs(f.c2 - Complex(2.0, 0.0)) < 1e-12);
    CHECK(std::abs(f.c1 - Complex(-4.0, 0.0)) < 1e-12);
    CHECK(std::abs(f.c0 - Complex(2.0, 0.0)) < 1e-12);
    CHECK_FALSE(f.two_simple_roots);
    REQUIRE(f.roots.size() == 2);
    CHECK(std::abs(f.roots[0] - Complex(1.0, 0.0)) < 1e-6);
  }
  SUBCASE("cauchy at 0 degenerates to a linear polynomial") {
    const StrongRegularityPolynomial f = strong_regularity_polynomial(cauchy_at_0());
    CHECK(std::abs(f.c2) < 1e-12);
    CHECK(std::abs(f.c1 - Complex(-2.0, 0.0)) < 1e-12);
    CHECK(std::abs(f.c0) < 1e-12);
    CHECK_FALSE(f.two_simple_roots);
  }
  SUBCASE("odd order is rejected") {
    CHECK_THROWS_AS(strong_regularity_polynomial(random_bc(3, 4)), std::invalid_argument);
  }
}

TEST_CASE("classification of the model problems") {
  CHECK(classify(dirichlet2()).classification == Classification::StronglyRegular);
  CHECK(classify(periodic2()).classification == Classification::Regular);
  CHECK(classify(cauchy_at_0()).classification == Classification::Irregular);
}

TEST_CASE("F(0) equals the forward theta with identical column order") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const BoundaryConditionSet bc = random_bc(4, seed);
    const StrongRegularityPolynomial f = strong_regularity_polynomial(bc);
    const ThetaResult t = theta(bc, 2, false);
    CHECK(std::abs(f.c0 - t.value) < 1e-10 * (1.0 + std::abs(t.value)));
  }
}

TEST_CASE("multilinearity: scaling one block scales theta by t^rank") {
  const BoundaryConditionSet bc = random_bc(4, 321);
  int j_scaled = -1;
  for (int j = 0; j < 4; ++j)
    if (bc.block(j).rank() > 0) j_scaled = j;
  REQUIRE(j_scaled >= 0);

  const Complex t_factor(0.7, -1.3);
  std::vector<ConditionBlock> blocks;
  for (int j = 0; j < 4; ++j) {
    ConditionBlock b = bc.block(j);
    if (j == j_scaled) {
      b.lead0 *= t_factor;
      b.lead1 *= t_factor;
      b.tail0 *= t_factor;
      b.tail1 *= t_factor;
    }
    blocks.push_back(b);
  }
  const BoundaryConditionSet scaled(4, blocks);
  const int rank = bc.block(j_scaled).rank();
  for (int p = 0; p <= 4; ++p) {
    const Complex before = theta(bc, p, false).value;
    const Complex after = theta(scaled, p, false).value;
    CHECK(std::abs(after - std::pow(t_factor, rank) * before) <
          1e-10 * (1.0 + std::abs(after)));
  }
  CHECK(classify(bc).classification == classify(scaled).classification);
}

TEST_CASE("column swap flips the determinant sign") {
  const BoundaryConditionSet bc = random_bc(4, 99);
  const ThetaResult t = theta(bc, 2, false);
  Matrix swapped = t.matrix.entries;
  swapped.col(0).swap(swapped.col(3));
  const Complex det_swapped = Eigen::PartialPivLU<Matrix>(swapped).determinant();
  CHECK(std::abs(det_swapped + t.value) < 1e-10 * (1.0 + std::abs(t.value)));
}

TEST_CASE("fourier factorization residual vanishes") {
  CHECK(fourier_factor_residual(dirichlet2()) <= 1e-14);
  CHECK(fourier_factor_residual(periodic2()) <= 1e-14);
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    CHECK(fourier_factor_residual(random_bc(6, seed)) <= 1e-12);
  }
}

TEST_CASE("the stacked column matrix (Q0 Q1) has full rank") {
  for (int n : {2, 3, 4, 5, 6}) {
    const BoundaryConditionSet bc = random_bc(n, 400 + n);
    Matrix q(n, 2 * n);
    q.leftCols(n) = b_column_matrix(bc, 0);
    q.rightCols(n) = b_column_matrix(bc, 1);
    Eigen::JacobiSVD<Matrix> svd(q);
    CHECK(svd.singularValues()[n - 1] > 1e-8);
  }
}

TEST_CASE("forward/swapped ratio is a nonzero constant per problem") {
  // The two orientations agree up to a nonzero factor; record the ratio, do
  // not pin its value.
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const BoundaryConditionSet bc = random_bc(4, seed);
    const RegularityReport report = classify(bc);
    if (report.classification == Classification::Irregular) continue;
    const Complex ratio = report.theta_forward / report.theta_swapped;
    CHECK(std::isfinite(std::abs(ratio)));
    CHECK(std::abs(ratio) > 1e-8);
    CHECK(std::abs(ratio) < 1e8);
  }
}

TEST_CASE("separated third-order problems are half-regular only") {
  // Two conditions at one end and one at the other kill exactly one of the
  // two regularity determinants.
  const BoundaryConditionSet left_heavy = normalize_conditions(
      3, {condition({{0, 0, Complex(1.0, 0.0)}}), condition({{0, 1, Complex(1.0, 0.0)}}),
          condition({{1, 0, Complex(1.0, 0.0)}})});
  const RegularityReport left = classify(left_heavy);
  CHECK(left.classification == Classification::HalfRegularOnly);
  CHECK(left.margin_forward <= 1e-12);
  CHECK(left.margin_swapped > 1e-8);

  const BoundaryConditionSet right_heavy = normalize_conditions(
      3, {condition({{0, 0, Complex(1.0, 0.0)}}), condition({{1, 1, Complex(1.0, 0.0)}}),
          condition({{1, 0, Complex(1.0, 0.0)}})});
  const RegularityReport right = classify(right_heavy);
  CHECK(right.classification == Classification::HalfRegularOnly);
  CHECK(right.margin_forward > 1e-8);
  CHECK(right.margin_swapped <= 1e-12);
}

TEST_CASE("odd order classification uses both orientations") {
  // Separated conditions for n = 3: two at the left end, one at the right.
  const BoundaryConditionSet bc = normalize_conditions(
      3, {condition({{0, 0, Complex(1.0, 0.0)}}), condition({{0, 1, Complex(1.0, 0.0)}}),
          condition({{1, 0, Complex(1.0, 0.0)}})});
  const RegularityReport report = classify(bc);
  CHECK(report.n == 3);
  CHECK(report.q == 1);
  // Both determinants nonzero makes an odd-order problem strongly regular.
  if (report.margin_forward > 1e-8 && report.margin_swapped > 1e-8)
    CHECK(report.classification == Classification::StronglyRegular);

  // Cauchy data at one end kills every column of one superscript.
  const BoundaryConditionSet cauchy3 = normalize_conditions(
      3, {condition({{0, 0, Complex(1.0, 0.0)}}), condition({{0, 1, Complex(1.0, 0.0)}}),
          condition({{0, 2, Complex(1.0, 0.0)}})});
  CHECK(classify(cauchy3).classification == Classification::Irregular);
}
