#include "birkhoff/expression.hpp"

#include <algorithm>
#include <cmath>

namespace birkhoff {

Coefficient Coefficient::polynomial(std::vector<Complex> coeffs) {
  Coefficient c;
  c.kind_ = Kind::Polynomial;
  c.poly_ = std::move(coeffs);
  return c;
}

Coefficient Coefficient::grid(std::vector<std::pair<double, Complex>> samples) {
  if (samples.size() < 2) throw std::invalid_argument("coefficient grid needs at least 2 samples");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].first > samples[i - 1].first))
      throw std::invalid_argument("coefficient grid abscissae must be strictly increasing");
  }
  Coefficient c;
  c.kind_ = Kind::Grid;
  c.samples_ = std::move(samples);
  return c;
}

Coefficient Coefficient::callable(std::function<Complex(double)> fn) {
  Coefficient c;
  c.kind_ = Kind::Callable;
  c.fn_ = std::move(fn);
  return c;
}

Complex Coefficient::operator()(double x) const {
  switch (kind_) {
    case Kind::Zero:
      return Complex(0.0, 0.0);
    case Kind::Polynomial: {
      Complex acc(0.0, 0.0);
      for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) acc = acc * x + *it;
      return acc;
    }
    case Kind::Grid: {
      if (x <= samples_.front().first) return samples_.front().second;
      if (x >= samples_.back().first) return samples_.back().second;
      auto hi = std::upper_bound(samples_.begin(), samples_.end(), x,
                                 [](double v, const auto& s) { return v < s.first; });
      auto lo = hi - 1;
      const double t = (x - lo->first) / (hi->first - lo->first);
      return lo->second + t * (hi->second - lo->second);
    }
    case Kind::Callable:
      return fn_(x);
  }
  return Complex(0.0, 0.0);
}

DifferentialExpression DifferentialExpression::essential(int n) {
  return DifferentialExpression(n, std::vector<Coefficient>(std::max(0, n - 1)));
}

DifferentialExpression::DifferentialExpression(int n, std::vector<Coefficient> coefficients)
    : n_(n), coefficients_(std::move(coefficients)) {
  if (n_ < 2) throw std::invalid_argument("expression order must be at least 2");
  if (static_cast<int>(coefficients_.size()) != n_ - 1)
    throw std::invalid_argument("expected n-1 coefficient functions (orders 0..n-2)");
  // Integrability proxy: every coefficient finite on a dense grid.
  for (int k = 0; k < n_ - 1; ++k) {
    if (coefficients_[k].is_zero()) continue;
    for (int i = 0; i <= 200; ++i) {
      const Complex v = coefficients_[k](i / 200.0);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::invalid_argument("coefficient p_" + std::to_string(k) +
                                    " is not finite on [0,1]");
    }
  }
}

bool DifferentialExpression::is_essential() const {
  for (const auto& c : coefficients_)
    if (!c.is_zero()) return false;
  return true;
}

Complex DifferentialExpression::coefficient(int k, double x) const {
  return coefficients_.at(k)(x);
}

}  // namespace birkhoff
