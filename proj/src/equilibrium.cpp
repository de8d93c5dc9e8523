#include "dersim/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dersim/agents.hpp"
#include "dersim/errors.hpp"

namespace dersim {

ShortfallAggregates shortfall_aggregates(std::span<const double> offers,
                                         std::span<const double> capacities, std::size_t i) {
  if (offers.size() != capacities.size() || i >= offers.size()) {
    throw ValidationError("shortfall_aggregates: size mismatch or index out of range");
  }
  ShortfallAggregates a;
  for (std::size_t j = 0; j < offers.size(); ++j) {
    if (j == i) continue;
    const double d = offers[j] - capacities[j];
    a.s_minus_i += d;
    a.s_plus_minus_i += std::max(d, 0.0);
  }
  return a;
}

// ---------------------------------------------------------------------------
// FollowerModel

FollowerModel::FollowerModel(const GameScenario& scenario, std::size_t draws, std::uint64_t seed)
    : scenario_(scenario), draws_(draws) {
  scenario_.validate();
  if (!(scenario_.lambda_rt > 0.0)) {
    throw ValidationError("equilibrium: lambda_rt must be > 0");
  }
  if (!uses_marginal_samples() && !uses_other_samples()) {
    return;
  }
  if (draws_ < kMinDraws) {
    throw ValidationError("equilibrium: draws must be >= " + std::to_string(kMinDraws));
  }
  const CapacitySampler sampler(scenario_.capacity, seed);
  if (uses_marginal_samples()) {
    marginal_.resize(draws_);
    for (std::size_t k = 0; k < draws_; ++k) {
      marginal_[k] = sampler.value(k, 0);
    }
  }
  if (uses_other_samples()) {
    const auto m = static_cast<std::size_t>(scenario_.n_prosumers - 1);
    others_.resize(draws_ * m);
    for (std::size_t k = 0; k < draws_; ++k) {
      for (std::size_t j = 0; j < m; ++j) {
        others_[k * m + j] = sampler.value(k, j + 1);
      }
    }
  }
}

bool FollowerModel::uses_marginal_samples() const noexcept {
  return !scenario_.is_linear() && scenario_.capacity.kind != CapacityKind::Deterministic;
}

bool FollowerModel::uses_other_samples() const noexcept {
  return scenario_.capacity.kind == CapacityKind::IidUniform && scenario_.n_prosumers >= 2;
}

double FollowerModel::expected_marginal_utility(double x) const {
  const auto& s = scenario_;
  if (s.is_linear()) {
    return s.utility.gamma;
  }
  if (s.capacity.kind == CapacityKind::Deterministic) {
    return s.utility.marginal(s.d0 + s.cbar() - x);
  }
  detail::CompensatedSum acc;
  for (double c : marginal_) {
    acc.add(s.utility.marginal(s.d0 + c - x));
  }
  return acc.value() / static_cast<double>(marginal_.size());
}

RhoBounds FollowerModel::bounds() const {
  return {expected_marginal_utility(0.0),
          scenario_.lambda_rt + expected_marginal_utility(scenario_.cbar())};
}

double FollowerModel::marginal_gain(double rho, double x) const {
  return (rho - expected_marginal_utility(x)) / scenario_.lambda_rt;
}

double FollowerModel::joint_cdf(double x) const {
  const auto& cap = scenario_.capacity;
  switch (cap.kind) {
    case CapacityKind::Deterministic:
      return x > cap.cbar ? 1.0 : 0.0;
    case CapacityKind::DependentUniform:
      return cdf_marginal(cap, x);
    case CapacityKind::IidUniform:
      return std::pow(cdf_marginal(cap, x), scenario_.n_prosumers);
  }
  return 0.0;
}

namespace {

// Per-draw conditional value of h given the other capacities c. With
// D = sum_{j != i} (c_j - x)^+ > 0 the event requires C_i in
// [lo, min(x, x + s)], and since s - S = -D the integrand is
// 1 - S D / (S + x - c)^2, whose antiderivative in c is c - S D / (S + x - c).
// With D = 0 there is no surplus to share and h gets nothing; `all_short`
// reports that case.
double h_given_others(const double* c, std::size_t m, double x, double lo, double hi, double density,
                      bool* all_short) {
  double big_s = 0.0;
  double deficit = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double d = x - c[j];
    if (d > 0.0) {
      big_s += d;
    } else {
      deficit -= d;
    }
  }
  *all_short = !(deficit > 0.0);
  if (*all_short) {
    return 0.0;
  }
  const double s = big_s - deficit;
  const double b = std::min({x, x + s, hi});
  if (!(b > lo)) {
    return 0.0;
  }
  const double sd = big_s * deficit;
  return density * ((b - lo) - sd * (1.0 / (big_s + x - b) - 1.0 / (big_s + x - lo)));
}

}  // namespace

Estimate FollowerModel::h_estimate(double x) const {
  if (!uses_other_samples()) {
    return {};
  }
  const auto& cap = scenario_.capacity;
  const double l = cap.half_width();
  const auto m = static_cast<std::size_t>(scenario_.n_prosumers - 1);
  return mc_estimate(draws_, [&](std::size_t k) {
    bool all_short = false;
    return h_given_others(&others_[k * m], m, x, cap.mu - l, cap.mu + l, 1.0 / (2.0 * l), &all_short);
  });
}

double FollowerModel::shortfall_slope(double x) const {
  if (!uses_other_samples()) {
    return joint_cdf(x);
  }
  // F(x) + h(x) from the same draws: given C_{-i}, the joint cdf term is
  // F(x) when every other prosumer is short and 0 otherwise. Estimating both
  // together keeps g monotone draw by draw. Where no draw sees the event the
  // estimate is 0, so it is floored by the exact joint cdf (a lower bound,
  // also nondecreasing).
  const auto& cap = scenario_.capacity;
  const double l = cap.half_width();
  const double lo = cap.mu - l;
  const double hi = cap.mu + l;
  const double f = cdf_marginal(cap, x);
  const auto m = static_cast<std::size_t>(scenario_.n_prosumers - 1);
  const double joint = mc_estimate(draws_, [&](std::size_t k) {
                          bool all_short = false;
                          const double h = h_given_others(&others_[k * m], m, x, lo, hi, 1.0 / (2.0 * l), &all_short);
                          return all_short ? f : h;
                        }).mean;
  return std::max(joint, joint_cdf(x));
}

double FollowerModel::g(double rho, double x) const {
  return marginal_gain(rho, x) - shortfall_slope(x);
}

double FollowerModel::response(double rho, double tol_x, int max_iterations, int* iterations) const {
  if (iterations) *iterations = 0;
  const RhoBounds b = bounds();
  const double cbar = scenario_.cbar();
  if (rho < b.rho_min) {
    return 0.0;
  }
  if (rho >= b.rho_max) {
    return cbar;
  }
  const auto r = bisect_last_nonnegative([&](double x) { return g(rho, x); }, 0.0, cbar, tol_x,
                                         max_iterations);
  if (iterations) *iterations = r.iterations;
  return r.x;
}

// ---------------------------------------------------------------------------

RhoBounds rho_bounds(const GameScenario& scenario, const SolverOptions& options) {
  return FollowerModel(scenario, options.draws, options.seed).bounds();
}

double symmetric_follower_response(const FollowerFixedPointSpec& spec) {
  if (!(spec.tol_x > 0.0)) {
    throw ValidationError("symmetric_follower_response: tol_x must be > 0");
  }
  const FollowerModel model(spec.scenario, spec.draws, spec.seed);
  return model.response(spec.rho, spec.tol_x, spec.max_iterations);
}

Estimate h_correction(const GameScenario& scenario, double x, std::size_t draws, std::uint64_t seed) {
  if (!(x >= 0.0) || x > scenario.cbar()) {
    throw ValidationError("h_correction: x must lie in [0, cbar]");
  }
  if (scenario.capacity.kind != CapacityKind::IidUniform || scenario.n_prosumers < 2) {
    scenario.validate();
    return {};
  }
  return FollowerModel(scenario, draws, seed).h_estimate(x);
}

// ---------------------------------------------------------------------------
// Mean field

double meanfield_beta(const CapacityModel& capacity, double x) {
  const double denom = expected_shortfall(capacity, x);
  if (!(denom > 0.0)) {
    return 0.0;
  }
  return std::clamp(std::max(x - capacity.mean(), 0.0) / denom, 0.0, 1.0);
}

namespace {

// The mean-field problem only sees the marginal law, so the model is built
// for a single prosumer to avoid sampling the others.
FollowerModel marginal_model(const GameScenario& scenario, const SolverOptions& options) {
  GameScenario single = scenario;
  single.n_prosumers = 1;
  return FollowerModel(single, options.draws, options.seed);
}

double kkt_residual(double gain, double slope, double x, double cbar) {
  if (x <= 0.0) return std::max(0.0, gain - slope);
  if (x >= cbar) return std::max(0.0, slope - gain);
  return std::abs(slope - gain);
}

}  // namespace

MeanFieldSolution meanfield_solve(const GameScenario& scenario, double rho, double tol,
                                  MeanFieldMethod method, const SolverOptions& options) {
  if (scenario.capacity.kind != CapacityKind::IidUniform) {
    throw ValidationError("meanfield_solve: requires iid_uniform capacities");
  }
  if (!(tol > 0.0)) {
    throw ValidationError("meanfield_solve: tol must be > 0");
  }
  const FollowerModel model = marginal_model(scenario, options);
  const CapacityModel& cap = scenario.capacity;
  const double cbar = cap.cbar;
  const double tol_x = std::min(options.tol_x, tol) * 1e-3;
  auto gain = [&](double x) { return model.marginal_gain(rho, x); };
  auto slope = [&](double beta, double x) { return beta * cdf_marginal(cap, x); };

  MeanFieldSolution sol;
  if (method == MeanFieldMethod::Bisection) {
    // -(beta(x) F(x) - gain(x)) is nonincreasing; take its last nonnegative point.
    const auto r = bisect_last_nonnegative(
        [&](double x) { return gain(x) - slope(meanfield_beta(cap, x), x); }, 0.0, cbar, tol_x,
        std::max(options.max_iterations, 200));
    sol.x_star = r.x;
    sol.iterations = r.iterations;
    sol.beta = meanfield_beta(cap, sol.x_star);
  } else {
    std::vector<double> trace;
    double beta = 1.0;
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
      const double b = beta;
      const double x = bisect_last_nonnegative([&](double z) { return gain(z) - slope(b, z); }, 0.0,
                                               cbar, tol_x, std::max(options.max_iterations, 200))
                           .x;
      const double target = meanfield_beta(cap, x);
      const double gap = std::abs(target - beta);
      trace.push_back(gap);
      sol.x_star = x;
      sol.iterations = it + 1;
      if (gap <= tol) {
        converged = true;
        break;
      }
      beta = std::clamp(0.5 * beta + 0.5 * target, 0.0, 1.0);
    }
    if (!converged) {
      std::ostringstream os;
      os << "meanfield_solve: damped iteration did not converge in 500 steps (last beta gap "
         << trace.back() << ")";
      throw SolverError(os.str(), std::move(trace));
    }
    sol.beta = beta;
  }
  sol.residual_beta = std::abs(sol.beta - meanfield_beta(cap, sol.x_star));
  sol.residual_offer = kkt_residual(gain(sol.x_star), slope(sol.beta, sol.x_star), sol.x_star, cbar);
  if (sol.residual_offer > tol || sol.residual_beta > tol) {
    std::ostringstream os;
    os << "meanfield_solve: residuals (" << sol.residual_offer << ", " << sol.residual_beta
       << ") exceed tolerance " << tol;
    throw SolverError(os.str(), {sol.residual_offer, sol.residual_beta});
  }
  return sol;
}

std::vector<double> mf_ratio_limit_check(const GameScenario& scenario, double x,
                                         std::span<const int> n_values, std::size_t draws,
                                         std::uint64_t seed) {
  if (scenario.capacity.kind != CapacityKind::IidUniform) {
    throw ValidationError("mf_ratio_limit_check: requires iid_uniform capacities");
  }
  const CapacitySampler sampler(scenario.capacity, seed);
  std::vector<double> out;
  out.reserve(n_values.size());
  for (int n : n_values) {
    if (n < 1) {
      throw ValidationError("mf_ratio_limit_check: N must be >= 1");
    }
    detail::CompensatedSum num, den;
    for (std::size_t k = 0; k < draws; ++k) {
      double net = 0.0;
      double pos = 0.0;
      for (int j = 0; j < n; ++j) {
        const double d = x - sampler.value(k, static_cast<std::size_t>(j));
        net += d;
        pos += std::max(d, 0.0);
      }
      num.add(std::max(net, 0.0) / n);
      den.add(pos / n);
    }
    out.push_back(den.value() > 0.0 ? num.value() / den.value() : 0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Leader problem

EquilibriumResult stackelberg_solve(const GameScenario& scenario, const SolverOptions& options,
                                    FollowerRegime regime) {
  if (options.rho_grid_points < 3) {
    throw ValidationError("stackelberg_solve: rho_grid_points must be >= 3");
  }
  if (!(options.tol_rho > 0.0)) {
    throw ValidationError("stackelberg_solve: tol_rho must be > 0");
  }
  if (regime == FollowerRegime::MeanField && scenario.capacity.kind != CapacityKind::IidUniform) {
    throw ValidationError("stackelberg_solve: mean-field regime requires iid_uniform capacities");
  }
  const FollowerModel model = regime == FollowerRegime::MeanField
                                  ? marginal_model(scenario, options)
                                  : FollowerModel(scenario, options.draws, options.seed);
  const double n = scenario.n_prosumers;
  const double mf_tol = 1e-8;

  // The golden-section refinement compares nearly equal profits, so it needs
  // offers well below tol_x.
  const double refine_tol = std::min(options.tol_x, 1e-12);
  auto offer = [&](double rho, double tol) {
    if (regime == FollowerRegime::MeanField) {
      return meanfield_solve(scenario, rho, mf_tol, MeanFieldMethod::Bisection, options).x_star;
    }
    return model.response(rho, tol, options.max_iterations);
  };
  auto profit = [&](double rho) { return (scenario.lambda_da - rho) * n * offer(rho, options.tol_x); };
  auto fine_profit = [&](double rho) { return (scenario.lambda_da - rho) * n * offer(rho, refine_tol); };

  EquilibriumResult res;
  const RhoBounds b = model.bounds();
  const double lo = std::max(0.0, b.rho_min);
  const double hi = std::min(scenario.lambda_da, b.rho_max);

  if (!(hi > lo)) {
    // Every admissible price leaves no margin or attracts nothing.
    res.rho_star = std::min(scenario.lambda_da, lo);
    res.diagnostics.grid_points = 0;
  } else {
    const int m = options.rho_grid_points;
    std::vector<double> grid(m), values(m);
    for (int k = 0; k < m; ++k) {
      grid[k] = k + 1 == m ? hi : lo + (hi - lo) * k / (m - 1);
      values[k] = profit(grid[k]);
    }
    const int best = static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
    res.diagnostics.grid_points = m;

    const double scale = std::max(1.0, std::abs(values[best]));
    double worst_curvature = -std::numeric_limits<double>::infinity();
    for (int k = 1; k + 1 < m; ++k) {
      worst_curvature = std::max(worst_curvature, values[k + 1] - 2.0 * values[k] + values[k - 1]);
    }
    res.diagnostics.concavity_ok = worst_curvature <= 1e-7 * scale;
    if (!res.diagnostics.concavity_ok) {
      res.diagnostics.warnings.push_back("leader profit not concave on the rho grid");
    }
    for (int k = 0; k < m; ++k) {
      if (std::abs(k - best) > 1 && values[k] >= values[best] - 1e-9 * scale) {
        res.diagnostics.multiple_maxima = true;
        res.diagnostics.warnings.push_back(
            "several separated grid maxima; uniqueness condition fails numerically");
        break;
      }
    }

    double rho = grid[best];
    double value = values[best];
    const double a = grid[std::max(best - 1, 0)];
    const double c = grid[std::min(best + 1, m - 1)];
    if (c - a > options.tol_rho) {
      const ScalarMaximum gs = golden_section_maximize(fine_profit, a, c, options.tol_rho);
      res.diagnostics.golden_iterations = gs.iterations;
      value = fine_profit(rho);
      if (gs.value > value) {
        rho = gs.x;
        value = gs.value;
      }
    }
    res.rho_star = rho;
  }

  int iters = 0;
  if (regime == FollowerRegime::MeanField) {
    const auto mf = meanfield_solve(scenario, res.rho_star, mf_tol, MeanFieldMethod::Bisection, options);
    res.x_star = mf.x_star;
    res.beta = mf.beta;
    iters = mf.iterations;
    res.diagnostics.follower_residual = mf.residual_offer;
  } else {
    res.x_star = model.response(res.rho_star, refine_tol, options.max_iterations, &iters);
    if (res.x_star > 0.0 && res.x_star < scenario.cbar()) {
      res.diagnostics.follower_residual = std::abs(model.g(res.rho_star, res.x_star));
    }
  }
  res.diagnostics.follower_iterations = iters;
  res.aggregate_x = n * res.x_star;
  res.leader_profit = aggregator_profit(scenario, res.rho_star, res.aggregate_x);
  return res;
}

}  // namespace dersim
