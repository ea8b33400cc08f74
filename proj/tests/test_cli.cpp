#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "birkhoff/cli.hpp"
#include "birkhoff/json_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace birkhoff;

namespace {

struct CliResult {
  int exit_code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() / "bspec_cli_test";
    std::filesystem::create_directories(path_);
  }
  std::string write(const std::string& name, const std::string& content) {
    const auto file = path_ / name;
    std::ofstream stream(file);
    stream << content;
    return file.string();
  }
  std::filesystem::path path_;
};

const char* kDirichlet = R"({
  "n": 2,
  "conditions": [
    {"terms": [{"end": 0, "order": 0, "re": 1, "im": 0}]},
    {"terms": [{"end": 1, "order": 0, "re": 1, "im": 0}]}
  ]
})";

const char* kCauchy0 = R"({
  "n": 2,
  "conditions": [
    {"terms": [{"end": 0, "order": 0, "re": 1, "im": 0}]},
    {"terms": [{"end": 0, "order": 1, "re": 1, "im": 0}]}
  ]
})";

}  // namespace

TEST_CASE("analyze reports classification and verdict") {
  TempDir dir;
  const std::string path = dir.write("dirichlet.json", kDirichlet);
  const CliResult result = run_cli({"analyze", path});
  CHECK(result.exit_code == 0);
  const Json doc = Json::parse(result.out);
  CHECK(doc.at("regularity").at("classification") == "strongly-regular");
  CHECK(doc.at("dissipativity").at("verdict") == "self-adjoint");
  CHECK(doc.at("validation").at("pass") == true);
}

TEST_CASE("analyze exits 2 on an irregular problem") {
  TempDir dir;
  const std::string path = dir.write("cauchy0.json", kCauchy0);
  const CliResult result = run_cli({"analyze", path});
  CHECK(result.exit_code == 2);
  const Json doc = Json::parse(result.out);
  CHECK(doc.at("regularity").at("classification") == "irregular");
}

TEST_CASE("analyze exits 1 on malformed input") {
  TempDir dir;
  const std::string path = dir.write("malformed.json", "{ not json");
  const CliResult result = run_cli({"analyze", path});
  CHECK(result.exit_code == 1);
  CHECK(result.err.find("error:") != std::string::npos);
}

TEST_CASE("analyze handles odd orders") {
  TempDir dir;
  const std::string path = dir.write("thirdorder.json", R"({
    "n": 3,
    "conditions": [
      {"terms": [{"end": 0, "order": 0, "re": 1, "im": 0}]},
      {"terms": [{"end": 0, "order": 1, "re": 1, "im": 0}]},
      {"terms": [{"end": 1, "order": 0, "re": 1, "im": 0}]}
    ]
  })");
  const CliResult result = run_cli({"analyze", path});
  const Json doc = Json::parse(result.out);
  CHECK(doc.at("regularity").at("classification") == "half-regular-only");
  CHECK_FALSE(doc.at("regularity").contains("f_polynomial"));
  CHECK(result.exit_code == 0);
}

TEST_CASE("theta emits a table in both formats") {
  TempDir dir;
  const std::string path = dir.write("dirichlet.json", kDirichlet);
  const CliResult json_result = run_cli({"theta", path});
  CHECK(json_result.exit_code == 0);
  const Json doc = Json::parse(json_result.out);
  CHECK(doc.at("table").size() == 3);

  const CliResult csv_result = run_cli({"theta", path, "--format", "csv"});
  CHECK(csv_result.exit_code == 0);
  CHECK(csv_result.out.find("p,forward_re") == 0);
}

TEST_CASE("ray-sweep refuses irregular problems with exit 2") {
  TempDir dir;
  const std::string path = dir.write("cauchy0.json", kCauchy0);
  const CliResult result = run_cli({"ray-sweep", path, "--rho-grid", "20,40"});
  CHECK(result.exit_code == 2);
}

TEST_CASE("ray-sweep emits one row per grid point plus the fit line") {
  TempDir dir;
  const std::string path = dir.write("dirichlet.json", kDirichlet);
  const CliResult result =
      run_cli({"ray-sweep", path, "--rho-grid", "10,20,40", "--no-resolvent", "--no-gram"});
  CHECK(result.exit_code == 0);
  int lines = 0, fit_lines = 0;
  std::istringstream stream(result.out);
  std::string line;
  while (std::getline(stream, line)) {
    if (line.rfind("#", 0) == 0) ++fit_lines;
    ++lines;
  }
  CHECK(lines == 1 + 3 + fit_lines);
  CHECK(fit_lines == 1);

  SUBCASE("single point sweeps skip the fit") {
    const CliResult single =
        run_cli({"ray-sweep", path, "--rho-grid", "20", "--no-resolvent", "--no-gram"});
    CHECK(single.exit_code == 0);
    CHECK(single.out.find("fitted_order") == std::string::npos);
  }
}

TEST_CASE("eig finds the dirichlet ground state") {
  TempDir dir;
  const std::string path = dir.write("dirichlet.json", kDirichlet);
  const CliResult result = run_cli({"eig", path, "--rect", "2.9,-0.3,3.4,0.3"});
  CHECK(result.exit_code == 0);
  const Json doc = Json::parse(result.out);
  REQUIRE(doc.at("eigenvalues").size() == 1);
  CHECK(doc.at("eigenvalues")[0].at("lambda").at("re").get<double>() ==
        doctest::Approx(M_PI * M_PI).epsilon(1e-8));
}

TEST_CASE("green prints the evaluation parts") {
  TempDir dir;
  const std::string path = dir.write("dirichlet.json", kDirichlet);
  const CliResult result =
      run_cli({"green", path, "--lambda", "-1,0", "--x", "0.5", "--xi", "0.25"});
  CHECK(result.exit_code == 0);
  const Json doc = Json::parse(result.out);
  const double expected = std::sinh(0.25) * std::sinh(0.5) / std::sinh(1.0);
  CHECK(doc.at("green").at("total").at("re").get<double>() ==
        doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("dissip test and sample") {
  TempDir dir;
  const std::string path = dir.write("dirichlet.json", kDirichlet);
  const CliResult verdict = run_cli({"dissip", "test", path});
  CHECK(verdict.exit_code == 0);
  CHECK(Json::parse(verdict.out).at("dissipativity").at("verdict") == "self-adjoint");

  const CliResult sample =
      run_cli({"dissip", "sample", "--n", "4", "--seed", "7", "--sigma", "0.5", "--samples", "3"});
  CHECK(sample.exit_code == 0);
  const Json batch = Json::parse(sample.out);
  CHECK(batch.at("samples").size() == 3);
  // Every emitted document parses back.
  for (const auto& entry : batch.at("samples")) {
    const ParsedProblem parsed = parse_problem(entry.at("document"));
    CHECK(parsed.expression.order() == 4);
  }
}

TEST_CASE("verify-krein summary is deterministic and clean") {
  const std::vector<std::string> args = {"verify-krein", "--orders", "2",
                                         "--samples",    "25",      "--seed", "1"};
  const CliResult first = run_cli(args);
  const CliResult second = run_cli(args);
  CHECK(first.exit_code == 0);
  CHECK(first.out == second.out);
  const Json doc = Json::parse(first.out);
  CHECK(doc.at("orders")[0].at("irregular") == 0);
  CHECK(doc.at("orders")[0].at("samples") == 25);
  CHECK(doc.at("counterexamples").empty());
}

TEST_CASE("campaign summaries do not depend on the worker count") {
  const std::vector<std::string> args = {"verify-krein", "--orders", "2,4",
                                         "--samples",    "12",      "--seed", "9"};
  setenv("BSPEC_THREADS", "1", 1);
  const CliResult serial = run_cli(args);
  setenv("BSPEC_THREADS", "4", 1);
  const CliResult parallel = run_cli(args);
  unsetenv("BSPEC_THREADS");
  CHECK(serial.exit_code == 0);
  CHECK(serial.out == parallel.out);
}

TEST_CASE("help exits zero") {
  const CliResult result = run_cli({"--help"});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("analyze") != std::string::npos);
}
