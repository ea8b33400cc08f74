#include "birkhoff/experiments.hpp"

#include "birkhoff/dissipativity.hpp"
#include "birkhoff/regularity.hpp"
#include "birkhoff/rng.hpp"
#include "birkhoff/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace birkhoff {

void parallel_for(int count, const std::function<void(int)>& fn) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BSPEC_THREADS")) {
    const int requested = std::atoi(env);
    if (requested > 0) workers = requested;
  }
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

RaySweepResult ray_sweep(const BoundaryConditionSet& bc, const DifferentialExpression& expr,
                         const std::vector<double>& rho_abs_grid,
                         const RaySweepOptions& options) {
  const int n = bc.order();
  const double arg_rho = options.arg_lambda / n;

  RaySweepResult result;
  {
    // Limit matrix from the decay count of the ray (any radius works).
    const SpectralPoint probe = spectral_point_from_rho(std::polar(100.0, arg_rho), n);
    const DecayProfile profile = decay_profile(probe);
    result.a_limit = char_matrix_limit(bc, n, profile);
  }

  result.rows.resize(rho_abs_grid.size());
  for (std::size_t i = 0; i < rho_abs_grid.size(); ++i) {
    RaySweepRow& row = result.rows[i];
    row.rho_abs = rho_abs_grid[i];
    row.rho_arg = arg_rho;
    const SpectralPoint sp = spectral_point_from_rho(std::polar(row.rho_abs, arg_rho), n);
    const DecayProfile profile = decay_profile(sp);
    const CharacteristicData data = delta_matrix(bc, expr, sp, profile);
    row.dev_delta = data.deviation;
    row.near_eigenvalue = data.near_eigenvalue;
    row.margins = profile.margins;
    {
      FundamentalSystem fss(expr, sp);
      row.bracket_dev = fss.column_bracket_deviations(0.0)
                            .cwiseMax(fss.column_bracket_deviations(1.0));
      if (options.with_gram) row.gram = gram_condition(fss, profile);
    }
    if (!row.near_eigenvalue) {
      const CharMatrix cm = char_matrix(bc, expr, sp, profile);
      row.a = cm.entries;
      row.dev_a = (cm.entries - result.a_limit).norm();
    }
    if (options.with_resolvent && !row.near_eigenvalue) {
      const int nodes =
          std::min(options.resolvent_max_nodes,
                   std::max(64, static_cast<int>(std::ceil(8.0 * row.rho_abs))));
      row.resolvent = resolvent_norm_estimate(bc, expr, sp.lambda, nodes);
    }
  }

  // Convergence order fit on rows inside the asymptotic regime and above the
  // round-off floor.
  const double floor = 1e-14 * (1.0 + result.a_limit.norm());
  std::vector<double> xs, ys;
  for (const auto& row : result.rows) {
    if (row.near_eigenvalue || row.dev_a <= floor) continue;
    if (row.rho_abs < kAsymptoticRadius) continue;
    xs.push_back(std::log(1.0 / row.rho_abs));
    ys.push_back(std::log(row.dev_a));
  }
  if (xs.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double m = static_cast<double>(xs.size());
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) > 1e-12) {
      result.fitted_order = (m * sxy - sx * sy) / denom;
      result.fit_valid = true;
    }
  }
  return result;
}

KreinResult verify_krein(const KreinConfig& config) {
  KreinResult result;
  result.config = config;

  struct Task {
    int n;
    int index;
  };
  std::vector<Task> tasks;
  for (int n : config.orders) {
    if (!config.selfadjoint && n % 2 != 0)
      throw std::invalid_argument("dissipative campaign orders must be even");
    for (int i = 0; i < config.samples_per_order; ++i) tasks.push_back({n, i});
  }

  result.samples.resize(tasks.size());
  std::vector<std::optional<BoundaryConditionSet>> offenders(tasks.size());

  parallel_for(static_cast<int>(tasks.size()), [&](int t) {
    const Task task = tasks[t];
    const std::uint64_t sample_seed =
        derive_seed(config.seed, static_cast<std::uint64_t>(task.n),
                    static_cast<std::uint64_t>(task.index));
    KreinSample sample;
    sample.n = task.n;
    sample.index = task.index;

    BoundaryConditionSet bc = [&] {
      if (config.selfadjoint) {
        sample.sigma = 1.0;
        return sample_selfadjoint_bc(task.n, sample_seed);
      }
      SplitMix64 rng(derive_seed(sample_seed, 0x517, 0));
      sample.sigma = rng.uniform();
      return sample_dissipative_bc(task.n, sample_seed, sample.sigma);
    }();

    const RegularityReport report = classify(bc, config.tol_theta);
    sample.theta_margin = (task.n % 2 == 0)
                              ? report.margin_forward
                              : std::min(report.margin_forward, report.margin_swapped);
    sample.irregular = report.classification == Classification::Irregular;
    result.samples[t] = sample;
    if (sample.irregular) offenders[t] = std::move(bc);
  });

  for (int n : config.orders) {
    KreinOrderSummary summary;
    summary.n = n;
    for (const auto& sample : result.samples) {
      if (sample.n != n) continue;
      ++summary.samples;
      if (sample.irregular) ++summary.irregular;
      summary.min_margin = (summary.samples == 1)
                               ? sample.theta_margin
                               : std::min(summary.min_margin, sample.theta_margin);
      const double m = sample.theta_margin;
      int bin = 0;
      if (m > 1e-2)
        bin = 4;
      else if (m > 1e-4)
        bin = 3;
      else if (m > 1e-6)
        bin = 2;
      else if (m > 1e-8)
        bin = 1;
      ++summary.histogram[bin];
    }
    result.orders.push_back(summary);
  }

  for (auto& offender : offenders) {
    if (offender.has_value()) result.counterexamples.push_back(std::move(*offender));
  }
  return result;
}

}  // namespace birkhoff
