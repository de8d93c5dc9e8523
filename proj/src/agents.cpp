#include "dersim/agents.hpp"

#include <cmath>
#include <string>

#include "dersim/errors.hpp"
#include "dersim/penalty.hpp"

namespace dersim {

namespace {

void check_offer(const GameScenario& s, double x, const char* what) {
  if (!(x >= 0.0) || x > s.cbar()) {
    throw ValidationError(std::string(what) + " must lie in [0, cbar]");
  }
}

template <class Fn>
Estimate marginal_expectation(const GameScenario& s, std::size_t draws, std::uint64_t seed, Fn&& f) {
  if (s.capacity.kind == CapacityKind::Deterministic) {
    return {f(s.cbar()), 0.0};
  }
  if (draws < kMinDraws) {
    throw ValidationError("expectation: draws must be >= " + std::to_string(kMinDraws));
  }
  const CapacitySampler sampler(s.capacity, seed);
  return mc_estimate(draws, [&](std::size_t k) { return f(sampler.value(k, 0)); });
}

}  // namespace

Estimate expected_utility(const GameScenario& s, double x, std::size_t draws, std::uint64_t seed) {
  if (s.is_linear()) {
    return {s.utility.gamma * (s.d0 + s.capacity.mean() - x), 0.0};
  }
  return marginal_expectation(s, draws, seed, [&](double c) { return s.utility.value(s.d0 + c - x); });
}

Estimate expected_marginal_utility(const GameScenario& s, double x, std::size_t draws,
                                   std::uint64_t seed) {
  if (s.is_linear()) {
    return {s.utility.gamma, 0.0};
  }
  return marginal_expectation(s, draws, seed,
                              [&](double c) { return s.utility.marginal(s.d0 + c - x); });
}

Estimate prosumer_payoff(const GameScenario& s, double rho, double x_i, double x_others,
                         std::size_t draws, std::uint64_t seed) {
  check_offer(s, x_i, "prosumer_payoff: x_i");
  check_offer(s, x_others, "prosumer_payoff: x_others");
  const Estimate u = expected_utility(s, x_i, draws, seed);
  Estimate phi{0.0, 0.0};
  if (x_i > 0.0) {
    phi = expected_penalty(s, x_i, x_others, draws, seed);
  }
  // Standard errors combined as if the two estimates were independent.
  return {rho * x_i + u.mean - phi.mean, std::sqrt(u.std_error * u.std_error + phi.std_error * phi.std_error)};
}

}  // namespace dersim
