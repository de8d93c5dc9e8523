#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dersim/numeric.hpp"
#include "dersim/scenario.hpp"

namespace dersim {

/// Offers x, realised capacities C and the real-time buy-back price.
struct PenaltyInput {
  std::span<const double> offers;
  std::span<const double> capacities;
  double lambda_rt = 0.0;
};

/// Minimum sample count for any expectation that feeds a solver.
inline constexpr std::size_t kMinDraws = 10'000;
inline constexpr std::size_t kDefaultDraws = 100'000;

/// Share of the aggregator's shortfall cost charged to prosumer i:
///   lambda_rt * (X - 1'C)^+ * (x_i - C_i)^+ / sum_j (x_j - C_j)^+,
/// with the ratio taken as 0 when nobody is short.
double penalty_share(const PenaltyInput& in, std::size_t i);

/// All N shares in one pass.
std::vector<double> penalty_shares(const PenaltyInput& in);

/// Expected share of prosumer i when every other prosumer offers x_others.
/// Monte Carlo over the scenario's capacity law; lambda_rt stands for its
/// mean. Deterministic given the seed.
Estimate expected_penalty(const GameScenario& scenario, double x_i, double x_others, std::size_t draws,
                          std::uint64_t seed);

/// Result of checking the five fairness properties on random instances.
struct AxiomReport {
  std::size_t instances = 0;
  std::size_t violations = 0;
  std::vector<std::string> messages;  // first few failures
  bool ok() const noexcept { return violations == 0; }
};

/// Nonnegativity, budget balance (relative tolerance `budget_rtol`), no
/// exploitation, symmetry and monotonicity on `instances` random
/// (x, C, lambda_rt) with N drawn from [1, max_n].
AxiomReport check_penalty_axioms(std::size_t instances, std::uint64_t seed, std::size_t max_n = 8,
                                 double budget_rtol = 1e-9);

}  // namespace dersim
