#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dersim/closedform.hpp"
#include "dersim/equilibrium.hpp"
#include "dersim/scenario.hpp"

namespace dersim {

/// Marginal cost `marginal` applies to output up to `upto`.
struct CostSegment {
  double upto = 0.0;
  double marginal = 0.0;
};

/// Dispatchable generator. With no segments the cost is kappa Q; otherwise
/// the segments give a convex piecewise-linear cost (nondecreasing marginals,
/// the last one extending to qmax).
struct GeneratorSpec {
  double kappa = 0.0;
  double qmin = 0.0;
  double qmax = std::numeric_limits<double>::infinity();
  std::vector<CostSegment> segments;

  double cost(double q) const;
  void validate() const;
};

enum class SupplyCurveKind { AggregatorAffine, ProsumerAffine, Tabulated };

std::string_view to_string(SupplyCurveKind kind);

/// Inverse supply offer p(q) on [0, quantity_cap] as ordered (quantity, price)
/// breakpoints with linear interpolation. Both coordinates are nondecreasing;
/// a repeated quantity is a vertical step, a repeated price a flat step.
struct SupplyCurve {
  SupplyCurveKind kind = SupplyCurveKind::Tabulated;
  std::vector<std::pair<double, double>> breakpoints;
  double quantity_cap = 0.0;

  static SupplyCurve affine(SupplyCurveKind kind, double price_at_zero, double slope, double cap);
  static SupplyCurve tabulated(std::vector<std::pair<double, double>> points, double cap);

  /// Lowest price at which q is offered.
  double price_at(double q) const;
  /// Largest quantity offered at `price`.
  double quantity_at(double price) const;
  /// Integral of p from 0 to q.
  double integral(double q) const;
  void validate() const;
};

enum class DispatchMode { Aggregated, Direct, NoDer, Social };

std::string_view to_string(DispatchMode mode);
DispatchMode dispatch_mode_from_string(std::string_view name);

struct DispatchProblem {
  std::vector<GeneratorSpec> generators;
  double demand = 0.0;
  std::optional<SupplyCurve> der_supply;  // ignored in NoDer mode
  DispatchMode mode = DispatchMode::NoDer;
};

inline constexpr std::string_view kTieRule = "pro-rata by remaining capacity at the clearing price";

struct DispatchOutcome {
  DispatchMode mode = DispatchMode::NoDer;
  std::vector<double> cleared_generator;
  double cleared_der = 0.0;
  double clearing_price = 0.0;
  double generator_cost = 0.0;
  double der_cost = 0.0;
  double total_cost = 0.0;
  bool tie_split = false;  // the tie rule was applied between resources
  std::string tie_rule{kTieRule};
};

/// Least-cost dispatch meeting inelastic demand exactly. All offers are
/// nondecreasing, so the optimum is the merit-order point where cumulative
/// supply meets demand; the clearing price is the balance multiplier.
DispatchOutcome clear_market(const DispatchProblem& problem);

enum class CurveMethod { Auto, ClosedForm, Numeric };

std::string_view to_string(CurveMethod method);
CurveMethod curve_method_from_string(std::string_view name);

struct CurveOptions {
  CurveMethod method = CurveMethod::Auto;
  /// Wholesale price grid for numeric curves. NaN picks rho_min and
  /// rho_min + 3 lambda_rt.
  double price_lo = std::numeric_limits<double>::quiet_NaN();
  double price_hi = std::numeric_limits<double>::quiet_NaN();
  int price_points = 257;
  SolverOptions solver;
};

/// True when the closed-form curves apply: fully dependent uniform capacities
/// and linear utility.
bool closed_form_applies(const GameScenario& scenario);

/// Closed-form parameters of a scenario (lambda_da taken from the scenario).
closedform::UniformLinearParams uniform_linear_params(const GameScenario& scenario);

/// Aggregator offer into the wholesale market. Auto uses the affine closed
/// form where it applies and otherwise tabulates X[rho*(p_A)] by solving the
/// leader problem at each wholesale price p_A.
SupplyCurve build_supply_curve_aggregated(const GameScenario& scenario, const CurveOptions& options = {});

/// Combined offer of N prosumers bidding directly, each maximising
/// p y + E[u(d0 + C_i - y) - lambda_rt (y - C_i)^+].
SupplyCurve build_supply_curve_direct(const GameScenario& scenario, const CurveOptions& options = {});

struct PoAgReport {
  double cost_aggregated = 0.0;
  double cost_direct = 0.0;
  double cost_noder = 0.0;
  double poag = 0.0;
  DispatchOutcome aggregated;
  DispatchOutcome direct;
  DispatchOutcome noder;
  GameScenario scenario;
  double demand = 0.0;
  std::uint64_t seed = 0;
  std::size_t draws = 0;
};

/// Clears the market with aggregated, direct and no DER participation and
/// reports C_A / C_P.
PoAgReport poag(const GameScenario& scenario, const std::vector<GeneratorSpec>& generators,
                double demand, const CurveOptions& options = {});

}  // namespace dersim
