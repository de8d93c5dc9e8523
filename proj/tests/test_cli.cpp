#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dersim/commands.hpp"
#include "dersim/errors.hpp"
#include "dersim/figures.hpp"
#include "dersim/scenario_file.hpp"

using namespace dersim;
using namespace dersim::cli;

namespace {

const std::string kDir = DERSIM_SCENARIO_DIR;

std::string scenario(const std::string& name) { return kDir + "/" + name; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string temp_file(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("dersim_test_" + name);
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

const char* kMinimal = R"({
  "schema_version": "1",
  "scenario": {
    "n_prosumers": 2, "d0": 40,
    "capacity": {"kind": "dependent_uniform", "mu": 10, "sigma": SIGMA},
    "utility": {"kind": "linear", "gamma": 2.5},
    "lambda_da": 4, "lambda_rt": 4
  },
  "solver": {"closed_form": true}
})";

std::string minimal(const std::string& sigma) {
  std::string s = kMinimal;
  s.replace(s.find("SIGMA"), 5, sigma);
  return s;
}

}  // namespace

TEST_CASE("scenario file parsing") {
  const auto f = load_scenario_file(scenario("fig5.json"));
  CHECK(f.scenario.n_prosumers == 10);
  CHECK(f.scenario.capacity.kind == CapacityKind::DependentUniform);
  CHECK(f.generators.size() == 1);
  CHECK(f.demand() == doctest::Approx(100.0));
  CHECK(f.closed_form);
  REQUIRE(f.sweep);
  CHECK(f.sweep->steps == 12);
  const auto g = f.with_parameter("sigma", 4.0);
  CHECK(g.scenario.cbar() == doctest::Approx(10.0 + kSqrt3 * 4.0));

  const auto iid = load_scenario_file(scenario("iid.json"));
  CHECK(iid.scenario.utility.kind == UtilityKind::Tabulated);
  CHECK(iid.generators.at(0).segments.size() == 2);
  CHECK(iid.solver.draws == 20000);

  SUBCASE("unknown keys are rejected") {
    std::string text = minimal("3.3");
    text.replace(text.find("\"lambda_rt\""), 0, "\"lambda_rtt\": 1, ");
    try {
      parse_scenario_file(text);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("scenario.lambda_rtt") != std::string::npos);
    }
  }
  SUBCASE("syntax errors carry the line") {
    std::string text = minimal("3.3");
    text.replace(text.find("\"lambda_da\""), 1, "");
    try {
      parse_scenario_file(text);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
  }
  SUBCASE("types are checked") {
    std::string text = minimal("\"big\"");
    CHECK_THROWS_AS(parse_scenario_file(text), ValidationError);
  }
}

TEST_CASE("validate exit codes") {
  std::ostringstream out;
  CHECK(cmd_validate(scenario("fig3.json"), {}, out) == kExitOk);
  CHECK(out.str().find("0 violations") != std::string::npos);

  std::ostringstream bad;
  CHECK(cmd_validate(scenario("invalid_d0.json"), {}, bad) == kExitInvalid);
  CHECK(bad.str().find("d0 > cbar") != std::string::npos);

  std::ostringstream off;
  CHECK(cmd_validate(temp_file("off_band.json", minimal("3.0")), {}, off) == kExitAdmissibility);
  CHECK(off.str().find("not admissible") != std::string::npos);

  std::ostringstream on;
  CHECK(cmd_validate(temp_file("on_band.json", minimal("3.3")), {}, on) == kExitOk);
}

TEST_CASE("equilibrium command") {
  std::ostringstream out;
  CHECK(cmd_equilibrium(scenario("fig3.json"), {}, false, std::nullopt, out) == kExitOk);
  const std::string csv = out.str();
  CHECK(csv.find("# seed=20210601") != std::string::npos);
  CHECK(csv.find("rho_star,x_star") != std::string::npos);
  CHECK(csv.find("\n2.50045") != std::string::npos);

  std::ostringstream det;
  cmd_equilibrium(scenario("deterministic.json"), {}, false, std::nullopt, det);
  CHECK(det.str().find("\n2.5,8,32,") != std::string::npos);

  std::ostringstream mf;
  CommonOptions c;
  c.draws = 20000;
  CHECK(cmd_equilibrium(temp_file("iid_linear.json", R"({
    "schema_version": "1",
    "scenario": {"n_prosumers": 2, "d0": 40,
      "capacity": {"kind": "iid_uniform", "mu": 10, "sigma": 3.3},
      "utility": {"kind": "linear", "gamma": 2.5}, "lambda_da": 4, "lambda_rt": 4}
  })"), c, true, 2.5, mf) == kExitOk);
  CHECK(mf.str().find("rho,beta,x_star") != std::string::npos);
  CHECK(mf.str().find("\n2.5,0,10,") != std::string::npos);
}

TEST_CASE("seed precedence") {
  SolverOptions file;
  file.seed = 5;
  CommonOptions c;
  CHECK(resolve_solver(file, c).seed == 5);
  setenv(kSeedEnv, "17", 1);
  CHECK(resolve_solver(file, c).seed == 17);
  c.seed = 99;
  CHECK(resolve_solver(file, c).seed == 99);
  setenv(kSeedEnv, "x", 1);
  c.seed.reset();
  CHECK_THROWS_AS(resolve_solver(file, c), ValidationError);
  unsetenv(kSeedEnv);
}

TEST_CASE("market commands") {
  std::ostringstream d;
  CHECK(cmd_dispatch(scenario("fig5.json"), {}, DispatchMode::NoDer, d) == kExitOk);
  CHECK(d.str().find("noder,100,3.25,0,100,325,0,325,0") != std::string::npos);
  std::ostringstream p;
  CHECK(cmd_poag(scenario("fig5.json"), {}, p) == kExitOk);
  CHECK(p.str().find("288.8590778,252.7181555,325,1.143008808") != std::string::npos);
  std::ostringstream curve;
  CHECK(cmd_supply_curve(scenario("fig5.json"), {}, DispatchMode::Aggregated, curve) == kExitOk);
  CHECK(curve.str().find("# kind=aggregator_affine") != std::string::npos);
}

TEST_CASE("sweep rows are ordered and complete") {
  std::ostringstream out;
  CHECK(cmd_sweep(scenario("fig5.json"), {}, out) == kExitOk);
  std::istringstream lines(out.str());
  std::string line;
  std::vector<double> sigma;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("sigma", 0) == 0) continue;
    sigma.push_back(std::stod(line.substr(0, line.find(','))));
    CHECK(line.substr(line.rfind(',') + 1) == "ok");
    CHECK(line.find("nan") == std::string::npos);
  }
  REQUIRE(sigma.size() == 12);
  for (std::size_t k = 1; k < sigma.size(); ++k) CHECK(sigma[k] > sigma[k - 1]);
}

TEST_CASE("failed sweep points are reported, not dropped") {
  const std::string path = temp_file("sweep_fail.json", R"({
    "schema_version": "1",
    "scenario": {"n_prosumers": 2, "d0": 40,
      "capacity": {"kind": "dependent_uniform", "mu": 10, "sigma": 3.3},
      "utility": {"kind": "linear", "gamma": 2.5}, "lambda_da": 4, "lambda_rt": 4},
    "sweep": {"parameter": "sigma", "from": 5, "to": 7, "steps": 3}
  })");
  std::ostringstream out;
  CHECK(cmd_sweep(path, {}, out) == kExitInvalid);
  const std::string csv = out.str();
  CHECK(csv.find("\n5,") != std::string::npos);
  CHECK(csv.find("\n7,,,,,,,,,,,,error: ") != std::string::npos);
}

TEST_CASE("figures") {
  const auto dir = (std::filesystem::temp_directory_path() / "dersim_test_figs").string();
  CommonOptions c;
  c.out = dir;
  std::ostringstream out;
  for (auto name : figure_names()) CHECK(cmd_figures(std::string(name), c, out) == kExitOk);
  const std::string fig3 = read_file(dir + "/fig3_offers.csv");
  CHECK(fig3.find("# git_describe=") != std::string::npos);
  CHECK(fig3.find("sigma,rho,x_star,x_star_closed_form,status") != std::string::npos);
  CHECK(read_file(dir + "/fig6_right.csv").find("\n6,") != std::string::npos);
  CHECK_THROWS_AS(make_figure("fig7", {}), ValidationError);
}
