#include "birkhoff/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>

namespace birkhoff {

namespace {

// Golub-Welsch on the Legendre Jacobi matrix, mapped from [-1,1] to [0,1].
QuadratureRule build_gauss_legendre(int order) {
  RealMatrix jacobi = RealMatrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k - 1, k) = b;
    jacobi(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = 0.5 * (solver.eigenvalues()[i] + 1.0);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;  // 2 * v0^2 on [-1,1], halved by the map
  }
  return rule;
}

const QuadratureRule& cached_rule(int order) {
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss_legendre(order)).first;
  return it->second;
}

}  // namespace

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be positive");
  return cached_rule(order);
}

QuadratureRule composite_gauss_legendre(int panels, int panel_order) {
  if (panels < 1) throw std::invalid_argument("panel count must be positive");
  const QuadratureRule& base = gauss_legendre(panel_order);
  QuadratureRule rule;
  rule.nodes.resize(panels * panel_order);
  rule.weights.resize(panels * panel_order);
  const double h = 1.0 / panels;
  for (int p = 0; p < panels; ++p) {
    for (int i = 0; i < panel_order; ++i) {
      rule.nodes[p * panel_order + i] = (p + base.nodes[i]) * h;
      rule.weights[p * panel_order + i] = base.weights[i] * h;
    }
  }
  return rule;
}

QuadratureRule oscillation_rule(double rho_abs, int min_nodes) {
  // >= 20 nodes per wavelength 2*pi/|rho| over a unit interval.
  const double required = 20.0 * std::abs(rho_abs) / (2.0 * M_PI);
  const int nodes = std::max(min_nodes, static_cast<int>(std::ceil(required)));
  const int panels = (nodes + 15) / 16;
  return composite_gauss_legendre(panels, 16);
}

}  // namespace birkhoff
