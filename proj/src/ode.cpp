#include "birkhoff/ode.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>

namespace birkhoff {

std::vector<ComplexState> integrate_at(const ComplexOde& f, ComplexState y0,
                                       const std::vector<double>& xs, double rtol, double atol) {
  namespace odeint = boost::numeric::odeint;

  if (xs.empty()) return {};
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] >= xs[i - 1]))
      throw std::invalid_argument("integration abscissae must be ascending");
  }

  std::vector<ComplexState> observed;
  observed.reserve(xs.size());
  auto observer = [&](const ComplexState& y, double) { observed.push_back(y); };

  auto stepper = odeint::make_controlled(atol, rtol, odeint::runge_kutta_dopri5<ComplexState>());
  try {
    odeint::integrate_times(stepper, f, y0, xs.begin(), xs.end(), 1e-4, observer,
                            odeint::max_step_checker(2'000'000));
  } catch (const std::exception& e) {
    throw IntegrationError(std::string("ODE integration failed: ") + e.what());
  }
  for (const auto& state : observed) {
    for (const Complex& v : state) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw IntegrationError("ODE integration produced a non-finite state");
    }
  }
  return observed;
}

}  // namespace birkhoff
