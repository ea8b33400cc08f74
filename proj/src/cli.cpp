#include "birkhoff/cli.hpp"

#include "birkhoff/dissipativity.hpp"
#include "birkhoff/experiments.hpp"
#include "birkhoff/json_io.hpp"
#include "birkhoff/regularity.hpp"
#include "birkhoff/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace birkhoff::cli {

namespace {

std::string fmt17(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

struct LoadedProblem {
  DifferentialExpression expr;
  BoundaryConditionSet bc;
};

LoadedProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem document: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  ParsedProblem parsed = parse_problem_text(buffer.str());
  const int n = parsed.expression.order();
  if (static_cast<int>(parsed.conditions.size()) != n)
    throw ParseError("document must carry exactly n conditions");
  BoundaryConditionSet bc = normalize_conditions(n, parsed.conditions);
  return LoadedProblem{std::move(parsed.expression), std::move(bc)};
}

void emit(const std::string& text, const std::string& out_path, std::ostream& fallback) {
  if (out_path.empty()) {
    fallback << text;
    if (text.empty() || text.back() != '\n') fallback << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write output file: " + out_path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  return values;
}

Complex parse_complex_pair(const std::string& text) {
  const auto values = parse_double_list(text);
  if (values.size() == 1) return Complex(values[0], 0.0);
  if (values.size() != 2) throw ParseError("expected a complex value as re,im");
  return Complex(values[0], values[1]);
}

int run_analyze(const std::string& path, double tol_theta, const std::string& out_path,
                std::ostream& out) {
  const LoadedProblem problem = load_problem(path);
  const RegularityReport regularity = classify(problem.bc, tol_theta);
  const DissipativityReport dissipativity = dissipativity_test(problem.bc);
  Json doc{{"version", kVersion},
           {"n", problem.bc.order()},
           {"essential", problem.expr.is_essential()},
           {"regularity", to_json(regularity)},
           {"dissipativity", to_json(dissipativity)},
           {"validation", to_json(validate(problem.bc))}};
  emit(doc.dump(2), out_path, out);
  return regularity.classification == Classification::Irregular ? 2 : 0;
}

int run_theta(const std::string& path, const std::string& format, const std::string& out_path,
              std::ostream& out) {
  const LoadedProblem problem = load_problem(path);
  const int n = problem.bc.order();
  if (format == "csv") {
    std::ostringstream csv;
    csv << "p,forward_re,forward_im,forward_margin,swapped_re,swapped_im,swapped_margin\n";
    for (int p = 0; p <= n; ++p) {
      const ThetaResult fwd = theta(problem.bc, p, false);
      const ThetaResult swp = theta(problem.bc, p, true);
      csv << p << ',' << fmt17(fwd.value.real()) << ',' << fmt17(fwd.value.imag()) << ','
          << fmt17(fwd.normalized_margin) << ',' << fmt17(swp.value.real()) << ','
          << fmt17(swp.value.imag()) << ',' << fmt17(swp.normalized_margin) << '\n';
    }
    emit(csv.str(), out_path, out);
    return 0;
  }
  Json table = Json::array();
  for (int p = 0; p <= n; ++p) {
    const ThetaResult fwd = theta(problem.bc, p, false);
    const ThetaResult swp = theta(problem.bc, p, true);
    table.push_back(Json{{"p", p},
                         {"forward", complex_to_json(fwd.value)},
                         {"forward_margin", fwd.normalized_margin},
                         {"swapped", complex_to_json(swp.value)},
                         {"swapped_margin", swp.normalized_margin}});
  }
  emit(Json{{"version", kVersion}, {"n", n}, {"table", table}}.dump(2), out_path, out);
  return 0;
}

int run_ray_sweep(const std::string& path, const std::string& rho_grid_text, double arg_lambda,
                  bool no_resolvent, bool no_gram, const std::string& out_path,
                  std::ostream& out) {
  const LoadedProblem problem = load_problem(path);
  const RegularityReport regularity = classify(problem.bc);
  if (regularity.classification == Classification::Irregular) return 2;

  std::vector<double> grid = parse_double_list(rho_grid_text);
  if (grid.empty()) grid = {20.0, 40.0, 80.0, 160.0, 320.0};
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw ParseError("rho grid must be increasing");

  RaySweepOptions options;
  options.arg_lambda = arg_lambda;
  options.with_resolvent = !no_resolvent;
  options.with_gram = !no_gram;
  const RaySweepResult sweep = ray_sweep(problem.bc, problem.expr, grid, options);

  const int n = problem.bc.order();
  std::ostringstream csv;
  csv << "abs_rho,arg_rho";
  for (int k = 0; k < n; ++k) csv << ",margin" << k;
  for (int k = 0; k < n; ++k) csv << ",bracket" << k;
  for (int k = 0; k < n; ++k)
    for (int t = 0; t < n; ++t) csv << ",a" << k << t << "_re,a" << k << t << "_im";
  csv << ",dev_a,dev_delta,gram_cond,resolvent,near_eigenvalue\n";
  for (const auto& row : sweep.rows) {
    csv << fmt17(row.rho_abs) << ',' << fmt17(row.rho_arg);
    for (int k = 0; k < n; ++k) csv << ',' << fmt17(row.margins[k]);
    for (int k = 0; k < n; ++k) csv << ',' << fmt17(row.bracket_dev[k]);
    for (int k = 0; k < n; ++k)
      for (int t = 0; t < n; ++t) {
        if (row.near_eigenvalue)
          csv << ",nan,nan";
        else
          csv << ',' << fmt17(row.a(k, t).real()) << ',' << fmt17(row.a(k, t).imag());
      }
    csv << ',' << fmt17(row.dev_a) << ',' << fmt17(row.dev_delta) << ',' << fmt17(row.gram)
        << ',' << fmt17(row.resolvent) << ',' << (row.near_eigenvalue ? 1 : 0) << '\n';
  }
  if (sweep.fit_valid) csv << "# fitted_order=" << fmt17(sweep.fitted_order) << '\n';
  emit(csv.str(), out_path, out);
  return 0;
}

int run_eig(const std::string& path, const std::string& rect_text, const std::string& out_path,
            std::ostream& out) {
  const LoadedProblem problem = load_problem(path);
  const auto values = parse_double_list(rect_text);
  if (values.size() != 4)
    throw ParseError("expected --rect re_lo,im_lo,re_hi,im_hi");
  const auto hits = eigenvalues_in(problem.bc, problem.expr, Complex(values[0], values[1]),
                                   Complex(values[2], values[3]));
  emit(Json{{"version", kVersion}, {"eigenvalues", to_json(hits)}}.dump(2), out_path, out);
  return 0;
}

int run_green(const std::string& path, const std::string& lambda_text, double x, double xi,
              const std::string& out_path, std::ostream& out) {
  const LoadedProblem problem = load_problem(path);
  const Complex lambda = parse_complex_pair(lambda_text);
  const SpectralPoint sp = spectral_point(lambda, problem.bc.order());
  const GreenEvaluation eval = green_eval(problem.bc, problem.expr, sp, x, xi);
  Json doc{{"version", kVersion}, {"lambda", complex_to_json(lambda)}, {"green", to_json(eval)}};
  emit(doc.dump(2), out_path, out);
  return 0;
}

int run_dissip_test(const std::string& path, const std::string& out_path, std::ostream& out) {
  const LoadedProblem problem = load_problem(path);
  const DissipativityReport report = dissipativity_test(problem.bc);
  emit(Json{{"version", kVersion}, {"dissipativity", to_json(report)}}.dump(2), out_path, out);
  return 0;
}

int run_dissip_sample(int n, std::uint64_t seed, double sigma, int count, bool selfadjoint,
                      const std::string& out_path, std::ostream& out) {
  Json samples = Json::array();
  for (int i = 0; i < count; ++i) {
    const std::uint64_t sample_seed = derive_seed(seed, static_cast<std::uint64_t>(n),
                                                  static_cast<std::uint64_t>(i));
    const BoundaryConditionSet bc = selfadjoint ? sample_selfadjoint_bc(n, sample_seed)
                                                : sample_dissipative_bc(n, sample_seed, sigma);
    Json entry{{"seed", sample_seed},
               {"sigma", selfadjoint ? 1.0 : sigma},
               {"document", problem_document(bc)}};
    samples.push_back(entry);
  }
  Json doc{{"version", kVersion},
           {"n", n},
           {"seed", seed},
           {"mode", selfadjoint ? "self-adjoint" : "dissipative"},
           {"samples", samples}};
  emit(doc.dump(2), out_path, out);
  return 0;
}

int run_verify_krein(const std::string& orders_text, int samples, std::uint64_t seed,
                     bool selfadjoint, double tol_theta, const std::string& out_path,
                     std::ostream& out) {
  KreinConfig config;
  config.orders.clear();
  for (double v : parse_double_list(orders_text)) config.orders.push_back(static_cast<int>(v));
  if (config.orders.empty()) config.orders = {2, 4};
  config.samples_per_order = samples;
  config.seed = seed;
  config.selfadjoint = selfadjoint;
  config.tol_theta = tol_theta;

  const KreinResult result = verify_krein(config);

  Json orders = Json::array();
  for (const auto& summary : result.orders) {
    orders.push_back(Json{{"n", summary.n},
                          {"samples", summary.samples},
                          {"irregular", summary.irregular},
                          {"min_margin", summary.min_margin},
                          {"histogram", summary.histogram}});
  }
  Json counterexamples = Json::array();
  for (const auto& bc : result.counterexamples) counterexamples.push_back(problem_document(bc));
  Json doc{{"version", kVersion},
           {"mode", selfadjoint ? "self-adjoint" : "dissipative"},
           {"seed", seed},
           {"samples_per_order", samples},
           {"tol_theta", tol_theta},
           {"orders", orders},
           {"counterexamples", counterexamples}};
  emit(doc.dump(2), out_path, out);
  return result.counterexamples.empty() ? 0 : 3;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Birkhoff regularity toolkit for two-point boundary value problems"};
  app.require_subcommand(1);

  std::string problem_path, out_path, format = "json";
  std::string rho_grid, rect_text, lambda_text, orders_text = "2,4";
  double tol_theta = kDefaultThetaTolerance;
  double arg_lambda = 1.5 * M_PI;
  double x = 0.5, xi = 0.25, sigma = 0.5;
  int samples = 200, sample_n = 2, sample_count = 1;
  std::uint64_t seed = 1;
  bool no_resolvent = false, no_gram = false, selfadjoint = false;

  auto* analyze = app.add_subcommand("analyze", "Classify a problem document");
  analyze->add_option("problem", problem_path)->required();
  analyze->add_option("--tol-theta", tol_theta);
  analyze->add_option("--out", out_path);

  auto* theta_cmd = app.add_subcommand("theta", "Regularity determinant table");
  theta_cmd->add_option("problem", problem_path)->required();
  theta_cmd->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
  theta_cmd->add_option("--out", out_path);

  auto* sweep = app.add_subcommand("ray-sweep", "Characteristic matrix along a ray");
  sweep->add_option("problem", problem_path)->required();
  sweep->add_option("--rho-grid", rho_grid);
  sweep->add_option("--arg-lambda", arg_lambda);
  sweep->add_flag("--no-resolvent", no_resolvent);
  sweep->add_flag("--no-gram", no_gram);
  sweep->add_option("--out", out_path);

  auto* eig = app.add_subcommand("eig", "Determinant zeros in a rho rectangle");
  eig->add_option("problem", problem_path)->required();
  eig->add_option("--rect", rect_text)->required();
  eig->add_option("--out", out_path);

  auto* green = app.add_subcommand("green", "Green function evaluation");
  green->add_option("problem", problem_path)->required();
  green->add_option("--lambda", lambda_text)->required();
  green->add_option("--x", x);
  green->add_option("--xi", xi);
  green->add_option("--out", out_path);

  auto* dissip = app.add_subcommand("dissip", "Dissipativity tools");
  dissip->require_subcommand(1);
  auto* dissip_test = dissip->add_subcommand("test", "Lagrange form verdict");
  dissip_test->add_option("problem", problem_path)->required();
  dissip_test->add_option("--out", out_path);
  auto* dissip_sample = dissip->add_subcommand("sample", "Sample condition sets");
  dissip_sample->add_option("--n", sample_n);
  dissip_sample->add_option("--seed", seed);
  dissip_sample->add_option("--sigma", sigma);
  dissip_sample->add_option("--samples", sample_count);
  dissip_sample->add_flag("--selfadjoint", selfadjoint);
  dissip_sample->add_option("--out", out_path);

  auto* krein = app.add_subcommand("verify-krein", "Seeded regularity campaign");
  krein->add_option("--orders", orders_text);
  krein->add_option("--samples", samples);
  krein->add_option("--seed", seed);
  krein->add_flag("--selfadjoint", selfadjoint);
  krein->add_option("--tol-theta", tol_theta);
  krein->add_option("--out", out_path);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (analyze->parsed()) return run_analyze(problem_path, tol_theta, out_path, out);
    if (theta_cmd->parsed()) return run_theta(problem_path, format, out_path, out);
    if (sweep->parsed())
      return run_ray_sweep(problem_path, rho_grid, arg_lambda, no_resolvent, no_gram, out_path,
                           out);
    if (eig->parsed()) return run_eig(problem_path, rect_text, out_path, out);
    if (green->parsed()) return run_green(problem_path, lambda_text, x, xi, out_path, out);
    if (dissip_test->parsed()) return run_dissip_test(problem_path, out_path, out);
    if (dissip_sample->parsed())
      return run_dissip_sample(sample_n, seed, sigma, sample_count, selfadjoint, out_path, out);
    if (krein->parsed())
      return run_verify_krein(orders_text, samples, seed, selfadjoint, tol_theta, out_path, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "error: no command selected\n";
  return 1;
}

int run_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace birkhoff::cli
