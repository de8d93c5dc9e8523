#pragma once

#include <cstddef>
#include <cstdint>

#include "dersim/numeric.hpp"
#include "dersim/scenario.hpp"

namespace dersim {

/// E[u(d0 + C_i - x)]. Analytic for linear utility, Monte Carlo otherwise.
Estimate expected_utility(const GameScenario& scenario, double x, std::size_t draws, std::uint64_t seed);

/// E[u'(d0 + C_i - x)]. Analytic for linear utility, Monte Carlo otherwise.
Estimate expected_marginal_utility(const GameScenario& scenario, double x, std::size_t draws,
                                   std::uint64_t seed);

/// Prosumer payoff rho x_i + E[u(d0 + C_i - x_i) - phi] when the other
/// prosumers all offer x_others. The nominal-demand retail bill is left out.
Estimate prosumer_payoff(const GameScenario& scenario, double rho, double x_i, double x_others,
                         std::size_t draws, std::uint64_t seed);

/// Arbitrage profit (lambda_da - rho) X of the aggregator.
inline double aggregator_profit(const GameScenario& scenario, double rho, double aggregate_x) {
  return (scenario.lambda_da - rho) * aggregate_x;
}

}  // namespace dersim
