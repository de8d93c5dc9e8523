#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dersim/equilibrium.hpp"
#include "dersim/market.hpp"
#include "dersim/scenario.hpp"

namespace dersim {

inline constexpr std::string_view kSchemaVersion = "1";

struct SweepSpec {
  std::string parameter;
  double from = 0.0;
  double to = 0.0;
  int steps = 1;

  double value(int k) const;
};

/// Parameters that a sweep can vary.
const std::vector<std::string_view>& sweep_parameters();

struct ScenarioFile {
  std::string schema_version{kSchemaVersion};
  GameScenario scenario;
  bool cbar_auto = true;  // cbar follows mu + √3 sigma when swept
  std::vector<GeneratorSpec> generators;
  double demand_per_prosumer = 0.0;
  SolverOptions solver;
  bool closed_form = false;  // closed-form results requested: admissibility is checked
  std::optional<SweepSpec> sweep;

  double demand() const noexcept { return demand_per_prosumer * scenario.n_prosumers; }
  /// Copy with one sweep parameter replaced.
  ScenarioFile with_parameter(std::string_view name, double value) const;
  void validate() const;
};

/// Strict parse: unknown keys and wrong types are ValidationErrors naming
/// the field (or the line for syntax errors).
ScenarioFile parse_scenario_file(std::string_view text);
ScenarioFile load_scenario_file(const std::string& path);

}  // namespace dersim
