#pragma once

#include "birkhoff/types.hpp"

#include <functional>
#include <vector>

namespace birkhoff {

/// Nodes and weights of a quadrature rule on [0, 1].
struct QuadratureRule {
  RealVector nodes;
  RealVector weights;

  int size() const { return static_cast<int>(nodes.size()); }

  Complex integrate(const std::function<Complex(double)>& f) const {
    Complex acc(0.0, 0.0);
    for (int i = 0; i < size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// Gauss-Legendre rule with `order` nodes on [0, 1] (Golub-Welsch).
QuadratureRule gauss_legendre(int order);

/// Composite Gauss-Legendre rule: `panels` equal panels on [0, 1], each
/// carrying a fixed-order base rule. Total node count = panels * panel_order.
QuadratureRule composite_gauss_legendre(int panels, int panel_order = 16);

/// Composite rule with at least `min_nodes` nodes, sized so that an
/// oscillation rate |rho| is resolved with >= 20 nodes per wavelength.
QuadratureRule oscillation_rule(double rho_abs, int min_nodes = 64);

}  // namespace birkhoff
