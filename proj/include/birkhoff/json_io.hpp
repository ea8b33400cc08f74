#pragma once

#include "birkhoff/conditions.hpp"
#include "birkhoff/dissipativity.hpp"
#include "birkhoff/expression.hpp"
#include "birkhoff/green.hpp"
#include "birkhoff/regularity.hpp"
#include "birkhoff/types.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace birkhoff {

using Json = nlohmann::json;

/// Complex values travel as {"re": x, "im": y} or [x, y].
Json complex_to_json(Complex z);
Complex complex_from_json(const Json& j, const std::string& location);

struct ParsedProblem {
  DifferentialExpression expression;
  std::vector<RawCondition> conditions;
};

/// Parses a problem document:
///   { "n": int,
///     "coefficients": "zero" | [ per-k grid [[x,re,im],...] or {"poly": [[re,im],...]} ],
///     "conditions": [ { "terms": [ {"end":0|1, "order":int, "re":..,"im":..} ] } ] }
/// Every violation is reported with its location in the document.
ParsedProblem parse_problem(const Json& document);
ParsedProblem parse_problem_text(const std::string& text);

/// Document for an essential problem (coefficients "zero") with the given
/// normalized conditions; round-trips through parse_problem + normalize.
Json problem_document(const BoundaryConditionSet& bc);

Json to_json(const RegularityReport& report);
Json to_json(const DissipativityReport& report);
Json to_json(const ValidationReport& report);
Json to_json(const GreenEvaluation& eval);
Json to_json(const std::vector<EigenvalueHit>& hits);

}  // namespace birkhoff
