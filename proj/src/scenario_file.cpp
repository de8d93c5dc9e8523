#include "dersim/scenario_file.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "dersim/errors.hpp"

namespace dersim {

using nlohmann::json;

namespace {

class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ValidationError("field '" + field + "': " + what);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) fail(field(key), "missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(field(key), "expected an integer");
    return v.get<long long>();
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail(field(key), "expected a string");
    return v.get<std::string>();
  }

  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(field(key), "expected true or false");
    return v.get<bool>();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(field(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

CapacityModel read_capacity(const json& j) {
  Object o(j, "scenario.capacity");
  const auto kind = capacity_kind_from_string(o.string("kind"));
  CapacityModel m;
  if (kind == CapacityKind::Deterministic) {
    m = CapacityModel::deterministic(o.number("cbar"));
  } else {
    const double mu = o.number("mu");
    const double sigma = o.number("sigma");
    std::optional<double> cbar;
    if (o.has("cbar")) cbar = o.number("cbar");
    m = kind == CapacityKind::DependentUniform ? CapacityModel::dependent_uniform(mu, sigma, cbar)
                                               : CapacityModel::iid_uniform(mu, sigma, cbar);
  }
  o.finish();
  return m;
}

UtilitySpec read_utility(const json& j) {
  Object o(j, "scenario.utility");
  const std::string kind = o.string("kind");
  UtilitySpec u;
  if (kind == "linear") {
    u = UtilitySpec::linear(o.number("gamma"));
  } else if (kind == "tabulated") {
    const json& pts = o.at("points");
    if (!pts.is_array()) Object::fail("scenario.utility.points", "expected an array of [z, u'(z)] pairs");
    std::vector<std::pair<double, double>> points;
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        Object::fail("scenario.utility.points", "expected an array of [z, u'(z)] pairs");
      }
      points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    u = UtilitySpec::tabulated(std::move(points));
  } else {
    Object::fail("scenario.utility.kind", "expected 'linear' or 'tabulated'");
  }
  o.finish();
  return u;
}

GeneratorSpec read_generator(const json& j, const std::string& path) {
  Object o(j, path);
  GeneratorSpec g;
  g.kappa = o.number_or("kappa", 0.0);
  g.qmin = o.number_or("qmin", 0.0);
  if (o.has("qmax") && !o.at("qmax").is_null()) g.qmax = o.number("qmax");
  if (o.has("segments")) {
    const json& segs = o.at("segments");
    if (!segs.is_array()) Object::fail(o.field("segments"), "expected an array");
    for (std::size_t k = 0; k < segs.size(); ++k) {
      Object s(segs[k], o.field("segments") + "[" + std::to_string(k) + "]");
      g.segments.push_back({s.number("upto"), s.number("marginal")});
      s.finish();
    }
  }
  o.finish();
  return g;
}

}  // namespace

double SweepSpec::value(int k) const {
  if (steps <= 1) return from;
  return k + 1 == steps ? to : from + (to - from) * k / (steps - 1);
}

const std::vector<std::string_view>& sweep_parameters() {
  static const std::vector<std::string_view> names = {
      "sigma", "mu", "gamma", "lambda_da", "lambda_rt", "kappa", "d0", "demand_per_prosumer", "n_prosumers"};
  return names;
}

ScenarioFile ScenarioFile::with_parameter(std::string_view name, double value) const {
  ScenarioFile f = *this;
  GameScenario& s = f.scenario;
  if (name == "sigma") {
    s.capacity.sigma = value;
  } else if (name == "mu") {
    s.capacity.mu = value;
  } else if (name == "gamma") {
    if (!s.is_linear()) throw ValidationError("sweep: gamma needs a linear utility");
    s.utility.gamma = value;
  } else if (name == "lambda_da") {
    s.lambda_da = value;
  } else if (name == "lambda_rt") {
    s.lambda_rt = value;
  } else if (name == "kappa") {
    if (f.generators.empty()) throw ValidationError("sweep: kappa needs a generator");
    f.generators.front().kappa = value;
  } else if (name == "d0") {
    s.d0 = value;
  } else if (name == "demand_per_prosumer") {
    f.demand_per_prosumer = value;
  } else if (name == "n_prosumers") {
    if (value < 1 || value != std::floor(value)) throw ValidationError("sweep: n_prosumers must be a positive integer");
    s.n_prosumers = static_cast<int>(value);
  } else {
    throw ValidationError("sweep: unknown parameter '" + std::string(name) + "'");
  }
  if (f.cbar_auto && s.capacity.is_uniform() && (name == "sigma" || name == "mu")) {
    s.capacity.cbar = s.capacity.mu + kSqrt3 * s.capacity.sigma;
  }
  return f;
}

void ScenarioFile::validate() const {
  if (schema_version != kSchemaVersion) {
    throw ValidationError("schema_version '" + schema_version + "' not supported (expected '" +
                          std::string(kSchemaVersion) + "')");
  }
  scenario.validate();
  for (const auto& g : generators) g.validate();
  if (!(demand_per_prosumer >= 0.0)) throw ValidationError("demand_per_prosumer must be >= 0");
  if (solver.draws < kMinDraws) {
    throw ValidationError("solver.draws must be at least " + std::to_string(kMinDraws));
  }
  if (!(solver.tol_x > 0.0) || !(solver.tol_rho > 0.0)) throw ValidationError("solver tolerances must be > 0");
  if (solver.rho_grid_points < 3) throw ValidationError("solver.rho_grid_points must be >= 3");
  if (sweep) {
    const auto& names = sweep_parameters();
    if (std::find(names.begin(), names.end(), sweep->parameter) == names.end()) {
      throw ValidationError("sweep.parameter '" + sweep->parameter + "' unknown");
    }
    if (sweep->steps < 1) throw ValidationError("sweep.steps must be >= 1");
  }
}

ScenarioFile parse_scenario_file(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ValidationError("parse error at line " + std::to_string(line) + ": " + e.what());
  }

  Object top(root, "");
  ScenarioFile f;
  f.schema_version = top.string("schema_version");
  {
    Object s(top.at("scenario"), "scenario");
    const long long n = s.integer("n_prosumers");
    if (n < 1 || n > 1000000) Object::fail("scenario.n_prosumers", "must be in [1, 1e6]");
    f.scenario.n_prosumers = static_cast<int>(n);
    f.scenario.d0 = s.number("d0");
    f.scenario.capacity = read_capacity(s.at("capacity"));
    f.cbar_auto = !root["scenario"]["capacity"].contains("cbar");
    f.scenario.utility = read_utility(s.at("utility"));
    f.scenario.lambda_da = s.number("lambda_da");
    f.scenario.lambda_rt = s.number("lambda_rt");
    s.finish();
  }
  if (top.has("generators")) {
    const json& gens = top.at("generators");
    if (!gens.is_array()) Object::fail("generators", "expected an array");
    for (std::size_t k = 0; k < gens.size(); ++k) {
      f.generators.push_back(read_generator(gens[k], "generators[" + std::to_string(k) + "]"));
    }
  }
  f.demand_per_prosumer = top.number_or("demand_per_prosumer", 0.0);
  if (top.has("solver")) {
    Object s(top.at("solver"), "solver");
    if (s.has("draws")) {
      const long long d = s.integer("draws");
      if (d < 0) Object::fail("solver.draws", "must be >= 0");
      f.solver.draws = static_cast<std::size_t>(d);
    }
    if (s.has("seed")) {
      const json& v = s.at("seed");
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        Object::fail("solver.seed", "expected a nonnegative integer");
      }
      f.solver.seed = v.get<std::uint64_t>();
    }
    f.solver.tol_x = s.number_or("tol_x", f.solver.tol_x);
    f.solver.tol_rho = s.number_or("tol_rho", f.solver.tol_rho);
    if (s.has("rho_grid_points")) f.solver.rho_grid_points = static_cast<int>(s.integer("rho_grid_points"));
    f.closed_form = s.boolean_or("closed_form", false);
    s.finish();
  }
  if (top.has("sweep")) {
    Object s(top.at("sweep"), "sweep");
    SweepSpec sw;
    sw.parameter = s.string("parameter");
    sw.from = s.number("from");
    sw.to = s.number("to");
    sw.steps = static_cast<int>(s.integer("steps"));
    s.finish();
    f.sweep = sw;
  }
  top.finish();
  f.validate();
  return f;
}

ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_file(buf.str());
}

}  // namespace dersim
