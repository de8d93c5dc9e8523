#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "dersim/capacity.hpp"

namespace dersim {

enum class UtilityKind { Linear, Tabulated };

/// Consumption utility u. Linear is u(z) = gamma z. Tabulated gives a
/// nonincreasing marginal utility u'(z) as piecewise-linear breakpoints
/// (extended flat beyond the ends) with u(z) = integral of u' from 0.
struct UtilitySpec {
  UtilityKind kind = UtilityKind::Linear;
  double gamma = 0.0;
  std::vector<std::pair<double, double>> marginal_points;

  static UtilitySpec linear(double gamma);
  static UtilitySpec tabulated(std::vector<std::pair<double, double>> points);

  double value(double z) const;
  double marginal(double z) const;
  void validate() const;
};

/// One instance of the prosumer-aggregator Stackelberg game.
struct GameScenario {
  int n_prosumers = 1;
  double d0 = 0.0;
  CapacityModel capacity;
  UtilitySpec utility;
  double lambda_da = 0.0;
  double lambda_rt = 0.0;

  double cbar() const noexcept { return capacity.cbar; }
  bool is_linear() const noexcept { return utility.kind == UtilityKind::Linear; }
  void validate() const;
};

}  // namespace dersim
