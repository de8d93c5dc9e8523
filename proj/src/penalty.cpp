#include "dersim/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dersim/errors.hpp"
#include "dersim/rng.hpp"

namespace dersim {

namespace {

void check_input(const PenaltyInput& in) {
  if (in.offers.size() != in.capacities.size() || in.offers.empty()) {
    throw ValidationError("penalty: offers and capacities must be non-empty and equally sized");
  }
  if (!(in.lambda_rt >= 0.0)) {
    throw ValidationError("penalty: lambda_rt must be >= 0");
  }
  for (std::size_t j = 0; j < in.offers.size(); ++j) {
    if (!(in.offers[j] >= 0.0) || !(in.capacities[j] >= 0.0)) {
      throw ValidationError("penalty: offers and capacities must be >= 0");
    }
  }
}

struct ShortfallTotals {
  double deficit = 0.0;     // (X - 1'C)^+
  double individual = 0.0;  // sum_j (x_j - C_j)^+
};

ShortfallTotals totals(const PenaltyInput& in) {
  double net = 0.0;
  double pos = 0.0;
  for (std::size_t j = 0; j < in.offers.size(); ++j) {
    const double d = in.offers[j] - in.capacities[j];
    net += d;
    pos += std::max(d, 0.0);
  }
  return {std::max(net, 0.0), pos};
}

// The cost is computed as (lambda * deficit) * (short / total) so that the
// share is monotone in the individual shortfall under rounding.
double share_of(double cost, double individual, const ShortfallTotals& t) {
  if (individual <= 0.0 || t.individual <= 0.0) {
    return 0.0;
  }
  return cost * (individual / t.individual);
}

}  // namespace

double penalty_share(const PenaltyInput& in, std::size_t i) {
  check_input(in);
  if (i >= in.offers.size()) {
    throw ValidationError("penalty: prosumer index out of range");
  }
  const ShortfallTotals t = totals(in);
  return share_of(in.lambda_rt * t.deficit, std::max(in.offers[i] - in.capacities[i], 0.0), t);
}

std::vector<double> penalty_shares(const PenaltyInput& in) {
  check_input(in);
  const ShortfallTotals t = totals(in);
  const double cost = in.lambda_rt * t.deficit;
  std::vector<double> out(in.offers.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = share_of(cost, std::max(in.offers[j] - in.capacities[j], 0.0), t);
  }
  return out;
}

Estimate expected_penalty(const GameScenario& scenario, double x_i, double x_others, std::size_t draws,
                          std::uint64_t seed) {
  if (draws < kMinDraws) {
    throw ValidationError("expected_penalty: draws must be >= " + std::to_string(kMinDraws));
  }
  const CapacitySampler sampler(scenario.capacity, seed);
  const auto n = static_cast<std::size_t>(scenario.n_prosumers);
  if (scenario.capacity.kind == CapacityKind::Deterministic) {
    // C = cbar surely: shortfalls only if offers exceed cbar.
    std::vector<double> x(n, x_others), c(n, scenario.cbar());
    x[0] = x_i;
    return {penalty_share({x, c, scenario.lambda_rt}, 0), 0.0};
  }
  const double lambda = scenario.lambda_rt;
  return mc_estimate(draws, [&](std::size_t k) {
    double net = 0.0;
    double pos = 0.0;
    double own = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (j == 0 ? x_i : x_others) - sampler.value(k, j);
      net += d;
      pos += std::max(d, 0.0);
      if (j == 0) own = std::max(d, 0.0);
    }
    return share_of(lambda * std::max(net, 0.0), own, {std::max(net, 0.0), pos});
  });
}

AxiomReport check_penalty_axioms(std::size_t instances, std::uint64_t seed, std::size_t max_n,
                                 double budget_rtol) {
  AxiomReport report;
  report.instances = instances;
  const CounterRng rng(seed);
  std::vector<double> x, c;
  auto fail = [&](std::size_t k, const std::string& what) {
    ++report.violations;
    if (report.messages.size() < 10) {
      std::ostringstream os;
      os << "instance " << k << ": " << what;
      report.messages.push_back(os.str());
    }
  };
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform(k, 0) * static_cast<double>(max_n));
    const double lambda = 10.0 * rng.uniform(k, 1);
    x.resize(n);
    c.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = 10.0 * rng.uniform(k, 2 + 2 * j);
      c[j] = 10.0 * rng.uniform(k, 3 + 2 * j);
    }
    // Force some exact shortfall ties so symmetry is exercised.
    if (n >= 2 && rng.uniform(k, 1000) < 0.3) {
      c[1] = c[0];
      x[1] = x[0];
    }
    const PenaltyInput in{x, c, lambda};
    const auto phi = penalty_shares(in);
    double net = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      net += x[j] - c[j];
      total += phi[j];
    }
    const double target = lambda * std::max(net, 0.0);
    if (std::abs(total - target) > budget_rtol * std::max(1.0, std::abs(target))) {
      fail(k, "budget balance");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (phi[i] < 0.0) fail(k, "nonnegativity");
      if (x[i] - c[i] <= 0.0 && phi[i] != 0.0) fail(k, "no exploitation");
      for (std::size_t j = 0; j < n; ++j) {
        const double di = x[i] - c[i];
        const double dj = x[j] - c[j];
        if (di == dj && phi[i] != phi[j]) fail(k, "symmetry");
        if (di >= dj && phi[i] < phi[j]) fail(k, "monotonicity");
      }
    }
  }
  return report;
}

}  // namespace dersim
