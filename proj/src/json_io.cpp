#include "birkhoff/json_io.hpp"

#include <set>

namespace birkhoff {

Json complex_to_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Complex complex_from_json(const Json& j, const std::string& location) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array()) {
    if (j.size() != 2 || !j[0].is_number() || !j[1].is_number())
      throw ParseError(location + ": complex value must be a [re, im] pair");
    return Complex(j[0].get<double>(), j[1].get<double>());
  }
  if (j.is_object()) {
    if (!j.contains("re") || !j.contains("im"))
      throw ParseError(location + ": complex value must carry \"re\" and \"im\"");
    return Complex(j.at("re").get<double>(), j.at("im").get<double>());
  }
  throw ParseError(location + ": not a complex value");
}

namespace {

Coefficient parse_coefficient(const Json& spec, int k) {
  const std::string location = "coefficients[" + std::to_string(k) + "]";
  if (spec.is_string()) {
    if (spec.get<std::string>() == "zero") return Coefficient::zero();
    throw ParseError(location + ": unknown coefficient keyword");
  }
  if (spec.is_object()) {
    if (!spec.contains("poly")) throw ParseError(location + ": expected a \"poly\" entry");
    std::vector<Complex> coeffs;
    int m = 0;
    for (const auto& c : spec.at("poly"))
      coeffs.push_back(complex_from_json(c, location + ".poly[" + std::to_string(m++) + "]"));
    return Coefficient::polynomial(std::move(coeffs));
  }
  if (spec.is_array()) {
    std::vector<std::pair<double, Complex>> samples;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const Json& row = spec[i];
      const std::string row_loc = location + "[" + std::to_string(i) + "]";
      if (!row.is_array() || row.size() != 3)
        throw ParseError(row_loc + ": grid sample must be [x, re, im]");
      samples.emplace_back(row[0].get<double>(),
                           Complex(row[1].get<double>(), row[2].get<double>()));
    }
    try {
      return Coefficient::grid(std::move(samples));
    } catch (const std::invalid_argument& e) {
      throw ParseError(location + ": " + e.what());
    }
  }
  throw ParseError(location + ": cannot interpret coefficient specification");
}

}  // namespace

ParsedProblem parse_problem(const Json& document) {
  if (!document.is_object()) throw ParseError("document: expected a JSON object");
  if (!document.contains("n")) throw ParseError("document: missing \"n\"");
  if (!document.at("n").is_number_integer()) throw ParseError("n: must be an integer");
  const int n = document.at("n").get<int>();
  if (n < 2) throw ParseError("n: order must be at least 2");

  std::vector<Coefficient> coefficients(n - 1);
  if (document.contains("coefficients")) {
    const Json& spec = document.at("coefficients");
    if (spec.is_string()) {
      if (spec.get<std::string>() != "zero")
        throw ParseError("coefficients: unknown keyword");
    } else if (spec.is_array()) {
      if (static_cast<int>(spec.size()) != n - 1)
        throw ParseError("coefficients: expected n-1 entries (orders 0..n-2)");
      for (int k = 0; k < n - 1; ++k) coefficients[k] = parse_coefficient(spec[k], k);
    } else {
      throw ParseError("coefficients: expected \"zero\" or an array");
    }
  }

  DifferentialExpression expression(n, std::move(coefficients));

  if (!document.contains("conditions")) throw ParseError("document: missing \"conditions\"");
  const Json& conditions_json = document.at("conditions");
  if (!conditions_json.is_array()) throw ParseError("conditions: expected an array");

  std::vector<RawCondition> conditions;
  for (std::size_t c = 0; c < conditions_json.size(); ++c) {
    const std::string cond_loc = "conditions[" + std::to_string(c) + "]";
    const Json& cj = conditions_json[c];
    if (!cj.is_object() || !cj.contains("terms"))
      throw ParseError(cond_loc + ": expected an object with \"terms\"");
    RawCondition condition;
    std::set<std::pair<int, int>> seen;
    for (std::size_t t = 0; t < cj.at("terms").size(); ++t) {
      const std::string term_loc = cond_loc + ".terms[" + std::to_string(t) + "]";
      const Json& tj = cj.at("terms")[t];
      if (!tj.is_object()) throw ParseError(term_loc + ": expected an object");
      if (!tj.contains("end") || !tj.contains("order"))
        throw ParseError(term_loc + ": missing \"end\" or \"order\"");
      RawCondition::Term term;
      term.end = tj.at("end").get<int>();
      term.order = tj.at("order").get<int>();
      if (term.end != 0 && term.end != 1)
        throw ParseError(term_loc + ": end must be 0 or 1");
      if (term.order < 0 || term.order >= n)
        throw ParseError(term_loc + ": order exceeds n-1");
      if (!seen.insert({term.end, term.order}).second)
        throw ParseError(term_loc + ": duplicate field (end " + std::to_string(term.end) +
                         ", order " + std::to_string(term.order) + ")");
      if (tj.contains("re") || tj.contains("im")) {
        term.coeff = Complex(tj.value("re", 0.0), tj.value("im", 0.0));
      } else if (tj.contains("coeff")) {
        term.coeff = complex_from_json(tj.at("coeff"), term_loc + ".coeff");
      } else {
        throw ParseError(term_loc + ": missing coefficient");
      }
      condition.terms.push_back(term);
    }
    bool nonzero = false;
    for (const auto& term : condition.terms)
      if (term.coeff != Complex(0.0, 0.0)) nonzero = true;
    if (!nonzero) throw ParseError(cond_loc + ": no nonzero coefficient");
    conditions.push_back(std::move(condition));
  }

  return ParsedProblem{std::move(expression), std::move(conditions)};
}

ParsedProblem parse_problem_text(const std::string& text) {
  Json document;
  try {
    document = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
  return parse_problem(document);
}

Json problem_document(const BoundaryConditionSet& bc) {
  const int n = bc.order();
  Json conditions = Json::array();
  const Matrix rows = bc.row_matrix();
  for (int r = 0; r < rows.rows(); ++r) {
    Json terms = Json::array();
    for (int c = 0; c < 2 * n; ++c) {
      const Complex coeff = rows(r, c);
      if (coeff == Complex(0.0, 0.0)) continue;
      terms.push_back(Json{{"end", c / n},
                           {"order", c % n},
                           {"re", coeff.real()},
                           {"im", coeff.imag()}});
    }
    conditions.push_back(Json{{"terms", terms}});
  }
  return Json{{"n", n}, {"coefficients", "zero"}, {"conditions", conditions}};
}

Json to_json(const RegularityReport& report) {
  Json theta_table = Json::array();
  for (const auto& [p, value] : report.theta_by_p)
    theta_table.push_back(Json{{"p", p}, {"value", complex_to_json(value)}});

  Json doc{{"n", report.n},
           {"q", report.q},
           {"classification", to_string(report.classification)},
           {"theta_forward", complex_to_json(report.theta_forward)},
           {"theta_swapped", complex_to_json(report.theta_swapped)},
           {"normalized_margins",
            Json{{"forward", report.margin_forward}, {"swapped", report.margin_swapped}}},
           {"theta_by_p", theta_table}};

  // The strong-regularity polynomial exists for even orders only.
  if (report.n % 2 == 0) {
    Json f_json = Json{{"c2", complex_to_json(report.f_polynomial.c2)},
                       {"c1", complex_to_json(report.f_polynomial.c1)},
                       {"c0", complex_to_json(report.f_polynomial.c0)},
                       {"identically_zero", report.f_polynomial.identically_zero},
                       {"two_simple_roots", report.f_polynomial.two_simple_roots}};
    Json roots = Json::array();
    for (std::size_t i = 0; i < report.f_polynomial.roots.size(); ++i) {
      roots.push_back(Json{{"value", complex_to_json(report.f_polynomial.roots[i])},
                           {"simple", static_cast<bool>(report.f_polynomial.root_simple[i])}});
    }
    f_json["roots"] = roots;
    doc["f_polynomial"] = f_json;
  }
  return doc;
}

Json to_json(const DissipativityReport& report) {
  Json eigenvalues = Json::array();
  for (int i = 0; i < report.restricted_eigenvalues.size(); ++i)
    eigenvalues.push_back(report.restricted_eigenvalues[i]);
  return Json{{"verdict", to_string(report.verdict)},
              {"restricted_eigenvalues", eigenvalues},
              {"margin", report.margin},
              {"warnings", report.warnings}};
}

Json to_json(const ValidationReport& report) {
  Json blocks = Json::array();
  for (const auto& check : report.blocks) {
    blocks.push_back(Json{{"order", check.order},
                          {"rank", check.rank},
                          {"svd_rank", check.svd_rank},
                          {"identity_ok", check.identity_ok}});
  }
  return Json{{"rank_sum", report.rank_sum},
              {"pass", report.pass},
              {"blocks", blocks},
              {"failures", report.failures}};
}

Json to_json(const GreenEvaluation& eval) {
  return Json{{"x", eval.x},
              {"xi", eval.xi},
              {"g0", complex_to_json(eval.g0_part)},
              {"correction", complex_to_json(eval.correction_part)},
              {"total", complex_to_json(eval.total)}};
}

Json to_json(const std::vector<EigenvalueHit>& hits) {
  Json list = Json::array();
  for (const auto& hit : hits) {
    list.push_back(Json{{"rho", complex_to_json(hit.rho)},
                        {"lambda", complex_to_json(hit.lambda)},
                        {"multiplicity", hit.multiplicity}});
  }
  return list;
}

}  // namespace birkhoff
