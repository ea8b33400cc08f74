#pragma once

#include "birkhoff/types.hpp"

#include <functional>
#include <vector>

namespace birkhoff {

using ComplexState = std::vector<Complex>;
using ComplexOde = std::function<void(const ComplexState& y, ComplexState& dydx, double x)>;

/// Integrates y' = f(y, x) from xs.front() through every requested abscissa
/// (ascending) with an adaptive Dormand-Prince scheme; returns the state at
/// each abscissa. Throws IntegrationError on stepper failure.
std::vector<ComplexState> integrate_at(const ComplexOde& f, ComplexState y0,
                                       const std::vector<double>& xs, double rtol = 1e-10,
                                       double atol = 1e-12);

}  // namespace birkhoff
