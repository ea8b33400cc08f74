#pragma once

#include "birkhoff/types.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace birkhoff {

/// One coefficient function p_k on [0, 1]: identically zero, a polynomial in
/// x, a sampled grid with linear interpolation, or an arbitrary callable.
class Coefficient {
 public:
  Coefficient() = default;

  static Coefficient zero() { return Coefficient(); }

  static Coefficient polynomial(std::vector<Complex> coeffs);

  /// Samples (x, value), strictly increasing in x, spanning [0, 1].
  static Coefficient grid(std::vector<std::pair<double, Complex>> samples);

  static Coefficient callable(std::function<Complex(double)> fn);

  bool is_zero() const { return kind_ == Kind::Zero; }

  Complex operator()(double x) const;

 private:
  enum class Kind { Zero, Polynomial, Grid, Callable };

  Kind kind_ = Kind::Zero;
  std::vector<Complex> poly_;
  std::vector<std::pair<double, Complex>> samples_;
  std::function<Complex(double)> fn_;
};

/// l(y) = D^n y + sum_{k=0}^{n-2} p_k(x) D^k y with D = -i d/dx. There is no
/// order n-1 term by construction.
class DifferentialExpression {
 public:
  /// The bare expression D^n.
  static DifferentialExpression essential(int n);

  /// General expression; `coefficients` has n-1 entries for k = 0..n-2.
  DifferentialExpression(int n, std::vector<Coefficient> coefficients);

  int order() const { return n_; }

  /// True when every p_k is identically zero.
  bool is_essential() const;

  /// p_k(x), k in [0, n-2].
  Complex coefficient(int k, double x) const;

  const Coefficient& coefficient_fn(int k) const { return coefficients_.at(k); }

  DifferentialExpression essential_part() const { return essential(n_); }

 private:
  int n_ = 0;
  std::vector<Coefficient> coefficients_;
};

}  // namespace birkhoff
