#include "birkhoff/spectral.hpp"

#include "birkhoff/ode.hpp"
#include "birkhoff/regularity.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace birkhoff {

Complex SpectralPoint::mu(int j) const { return rho * unity_root(n, j); }

SpectralPoint spectral_point(Complex lambda, int n) {
  if (n < 2) throw std::invalid_argument("order must be at least 2");
  if (lambda == Complex(0.0, 0.0))
    throw std::invalid_argument("spectral point requires lambda != 0");
  double arg_lambda = std::arg(lambda);
  if (arg_lambda < 0.0) arg_lambda += 2.0 * M_PI;
  SpectralPoint sp;
  sp.lambda = lambda;
  sp.n = n;
  const double r = std::pow(std::abs(lambda), 1.0 / n);
  sp.rho = std::polar(r, arg_lambda / n);
  sp.sector = (arg_lambda < M_PI) ? 0 : 1;
  return sp;
}

SpectralPoint spectral_point_from_rho(Complex rho, int n) {
  if (n < 2) throw std::invalid_argument("order must be at least 2");
  if (rho == Complex(0.0, 0.0)) throw std::invalid_argument("rho must be nonzero");
  SpectralPoint sp;
  sp.rho = rho;
  sp.n = n;
  sp.lambda = std::pow(rho, n);
  double arg_rho = std::arg(rho);
  if (arg_rho < 0.0) arg_rho += 2.0 * M_PI;
  sp.sector = static_cast<int>(std::floor(arg_rho * n / M_PI));
  return sp;
}

DecayProfile decay_profile(const SpectralPoint& sp, double delta) {
  if (delta < 0.0) throw std::invalid_argument("decay margin must be nonnegative");
  const int n = sp.n;
  DecayProfile profile;
  profile.delta = delta;
  profile.margins.resize(n);
  const double r = std::abs(sp.rho);
  int count = 0;
  bool prefix = true;
  for (int k = 0; k < n; ++k) {
    profile.margins[k] = std::imag(sp.rho * unity_root(n, k)) / r;
    if (std::abs(profile.margins[k]) <= std::max(delta, 1e-12)) profile.neutral_present = true;
  }
  for (int k = 0; k < n; ++k) {
    if (profile.margins[k] > delta) {
      if (k != count) prefix = false;  // a gap before this decaying index
      ++count;
    }
  }
  profile.p = count;
  profile.prefix_ok = prefix;

  const int q = n / 2;
  profile.table_p = (n % 2 == 0) ? q - 1 : (sp.sector == 0 ? q : q - 1);
  if (profile.p != profile.table_p + 1) {
    profile.warnings.push_back("decay count p=" + std::to_string(profile.p) +
                               " does not equal tabulated value " +
                               std::to_string(profile.table_p) + " plus one");
  }
  if (profile.neutral_present && delta == 0.0) {
    profile.warnings.push_back("neutral exponential present");
  }
  return profile;
}

FundamentalSystem::FundamentalSystem(DifferentialExpression expr, SpectralPoint sp, double rtol,
                                     std::optional<std::vector<bool>> anchor_right)
    : expr_(std::move(expr)), sp_(sp), rtol_(rtol) {
  if (expr_.order() != sp_.n)
    throw std::invalid_argument("expression order does not match spectral point");
  backend_ = expr_.is_essential() ? Backend::ExactExponential : Backend::NumericIvp;
  const int n = sp_.n;
  if (anchor_right.has_value()) {
    if (static_cast<int>(anchor_right->size()) != n)
      throw std::invalid_argument("anchor flags must have one entry per column");
    anchor_right_ = std::move(*anchor_right);
  } else {
    anchor_right_.resize(n);
    for (int j = 0; j < n; ++j) anchor_right_[j] = std::imag(mu(j)) > 0.0;
  }
  fourier_.resize(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) fourier_(k, j) = unity_root(n, (j * k) % n);
}

std::vector<Matrix> FundamentalSystem::scaled_frames(const std::vector<double>& xs) const {
  const int n = sp_.n;
  for (double x : xs) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("evaluation point outside [0, 1]");
  }
  if (backend_ == Backend::ExactExponential) {
    return std::vector<Matrix>(xs.size(), fourier_);
  }

  std::vector<double> sorted(xs);
  sorted.push_back(0.0);
  sorted.push_back(1.0);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const std::size_t count = sorted.size();

  const Complex rho = sp_.rho;
  std::vector<Matrix> frames_sorted(count, Matrix(n, n));
  for (int j = 0; j < n; ++j) {
    const Complex mu_j = mu(j);
    // Rescaled derivative stack nu_m = rho^{-m} D^m y_j exp(-i mu_j x).
    auto slope = [&, mu_j](const ComplexState& nu, ComplexState& dnu, double x) {
      for (int m = 0; m < n - 1; ++m)
        dnu[m] = kImagUnit * (rho * nu[m + 1] - mu_j * nu[m]);
      Complex forcing = rho * nu[0];
      for (int k = 0; k <= n - 2; ++k) {
        const Complex pk = expr_.coefficient(k, x);
        if (pk != Complex(0.0, 0.0)) forcing -= pk * std::pow(rho, k - n + 1) * nu[k];
      }
      dnu[n - 1] = kImagUnit * (forcing - mu_j * nu[n - 1]);
    };

    ComplexState data(n);
    for (int m = 0; m < n; ++m) data[m] = std::pow(unity_root(n, j), m);

    std::vector<ComplexState> states(count);
    if (!anchor_right_[j]) {
      const auto observed = integrate_at(slope, std::move(data), sorted, rtol_, 1e-12);
      states = observed;
    } else {
      // Integrate from x = 1 in the reflected variable t = 1 - x.
      std::vector<double> ts(count);
      for (std::size_t s = 0; s < count; ++s) ts[s] = 1.0 - sorted[count - 1 - s];
      ComplexOde reflected = [&](const ComplexState& nu, ComplexState& dnu, double t) {
        slope(nu, dnu, 1.0 - t);
        for (int m = 0; m < n; ++m) dnu[m] = -dnu[m];
      };
      const auto observed = integrate_at(reflected, std::move(data), ts, rtol_, 1e-12);
      for (std::size_t s = 0; s < count; ++s) states[s] = observed[count - 1 - s];
    }
    for (std::size_t s = 0; s < count; ++s)
      for (int m = 0; m < n; ++m) frames_sorted[s](m, j) = states[s][m];
  }

  std::vector<Matrix> frames;
  frames.reserve(xs.size());
  for (double x : xs) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    frames.push_back(frames_sorted[static_cast<std::size_t>(it - sorted.begin())]);
  }
  return frames;
}

Matrix FundamentalSystem::scaled_frame(double x) const {
  if (backend_ == Backend::ExactExponential) return fourier_;
  return scaled_frames({x}).front();
}

Matrix FundamentalSystem::evaluate(double x) const {
  const int n = sp_.n;
  const Matrix frame = scaled_frame(x);
  Matrix m(n, n);
  for (int j = 0; j < n; ++j) {
    const Complex osc = std::exp(kImagUnit * mu(j) * x);
    Complex rho_pow(1.0, 0.0);
    for (int k = 0; k < n; ++k) {
      m(k, j) = rho_pow * frame(k, j) * osc;
      rho_pow *= sp_.rho;
    }
  }
  return m;
}

Vector FundamentalSystem::dual_scaled(double x) const {
  const int n = sp_.n;
  const Matrix frame = scaled_frame(x);
  Eigen::FullPivLU<Matrix> lu(frame);
  if (!lu.isInvertible())
    throw SingularMatrixError("fundamental system frame is singular");
  Vector rhs = Vector::Zero(n);
  rhs[n - 1] = Complex(1.0, 0.0);
  return lu.solve(rhs);
}

Vector FundamentalSystem::dual(double x) const {
  const int n = sp_.n;
  const Vector s = dual_scaled(x);
  const Complex rho_pow = std::pow(sp_.rho, n - 1);
  Vector dual(n);
  for (int j = 0; j < n; ++j)
    dual[j] = s[j] * std::exp(-kImagUnit * mu(j) * x) / rho_pow;
  return dual;
}

double FundamentalSystem::bracket_deviation(double x) const {
  return column_bracket_deviations(x).maxCoeff();
}

RealVector FundamentalSystem::column_bracket_deviations(double x) const {
  const Matrix frame = scaled_frame(x);
  RealVector devs = RealVector::Zero(sp_.n);
  for (int j = 0; j < frame.cols(); ++j)
    for (int k = 0; k < frame.rows(); ++k)
      devs[j] = std::max(devs[j], std::abs(frame(k, j) / fourier_(k, j) - Complex(1.0, 0.0)));
  return devs;
}

Complex FundamentalSystem::scaled_wronskian(double x) const {
  return Eigen::PartialPivLU<Matrix>(scaled_frame(x)).determinant();
}

namespace {

// z_k(x) = y_k(x) for decaying indices, y_k(x)*exp(-i*mu_k) otherwise; in
// frame variables the rescale keeps every exponent nonpositive.
Complex z_exponential(const SpectralPoint& sp, const DecayProfile& profile, int k, double x) {
  const Complex mu = sp.mu(k);
  return (k < profile.p) ? std::exp(kImagUnit * mu * x) : std::exp(kImagUnit * mu * (x - 1.0));
}

Complex u_exponential(const SpectralPoint& sp, const DecayProfile& profile, int t, double x) {
  const Complex mu = sp.mu(t);
  return (t < profile.p) ? std::exp(kImagUnit * mu * (1.0 - x)) : std::exp(-kImagUnit * mu * x);
}

}  // namespace

RescaledValues rescaled_systems(const FundamentalSystem& fss, const DecayProfile& profile,
                                double x) {
  const int n = fss.size();
  const Matrix frame = fss.scaled_frame(x);
  const Vector s = fss.dual_scaled(x);
  RescaledValues values;
  values.z.resize(n);
  values.u.resize(n);
  for (int k = 0; k < n; ++k) {
    values.z[k] = frame(0, k) * z_exponential(fss.point(), profile, k, x);
    const Complex eps_pow = std::pow(unity_root(n, k), n - 1);
    values.u[k] =
        static_cast<double>(n) * eps_pow * s[k] * u_exponential(fss.point(), profile, k, x);
  }
  return values;
}

double gram_condition_of_samples(const Matrix& samples, const QuadratureRule& rule) {
  if (samples.rows() != rule.nodes.size())
    throw std::invalid_argument("sample rows must match quadrature nodes");
  const int count = static_cast<int>(samples.cols());
  Matrix weighted = samples;
  for (int i = 0; i < rule.size(); ++i) weighted.row(i) *= std::sqrt(rule.weights[i]);
  Matrix gram = weighted.adjoint() * weighted;
  // Normalize to unit diagonal.
  RealVector norms(count);
  for (int k = 0; k < count; ++k) {
    norms[k] = std::sqrt(std::abs(gram(k, k).real()));
    if (norms[k] <= 1e-300) throw std::invalid_argument("zero-norm sample column");
  }
  for (int k = 0; k < count; ++k)
    for (int m = 0; m < count; ++m) gram(k, m) /= norms[k] * norms[m];
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
  const double lo = solver.eigenvalues().minCoeff();
  const double hi = solver.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double gram_condition(const FundamentalSystem& fss, const DecayProfile& profile, int min_nodes) {
  const double r = std::abs(fss.point().rho);
  const QuadratureRule rule = oscillation_rule(r, min_nodes);
  if (rule.size() < 20.0 * r / (2.0 * M_PI))
    throw std::invalid_argument("quadrature under-resolved for this |rho|");

  std::vector<double> xs(rule.nodes.data(), rule.nodes.data() + rule.size());
  const auto frames = fss.scaled_frames(xs);
  Matrix samples(rule.size(), fss.size());
  for (int i = 0; i < rule.size(); ++i)
    for (int k = 0; k < fss.size(); ++k)
      samples(i, k) = frames[i](0, k) * z_exponential(fss.point(), profile, k, xs[i]);
  return gram_condition_of_samples(samples, rule);
}

}  // namespace birkhoff
