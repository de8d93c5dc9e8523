#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dersim/numeric.hpp"
#include "dersim/penalty.hpp"
#include "dersim/scenario.hpp"

namespace dersim {

inline constexpr std::uint64_t kDefaultSeed = 20210601;

struct SolverOptions {
  std::size_t draws = kDefaultDraws;
  std::uint64_t seed = kDefaultSeed;
  double tol_x = 1e-8;
  int max_iterations = 200;
  double tol_rho = 1e-6;
  int rho_grid_points = 512;
};

/// Prices below rho_min draw no offer; at or above rho_max every prosumer
/// offers cbar.
struct RhoBounds {
  double rho_min = 0.0;
  double rho_max = 0.0;
};

RhoBounds rho_bounds(const GameScenario& scenario, const SolverOptions& options = {});

/// Sums over the other prosumers j != i: s = sum (x_j - C_j) and
/// S = sum (x_j - C_j)^+. Always S >= s and S >= 0.
struct ShortfallAggregates {
  double s_minus_i = 0.0;
  double s_plus_minus_i = 0.0;
};

ShortfallAggregates shortfall_aggregates(std::span<const double> offers,
                                         std::span<const double> capacities, std::size_t i);

/// The symmetric follower problem at a fixed scenario. Holds the common
/// random numbers shared by every evaluation, so g(x) is a deterministic,
/// monotone function of x for a fixed seed.
///
/// The first-order condition of a symmetric Nash equilibrium is g(x) = 0 with
///   g(x) = (rho - E[u'(d0 + C_i - x)]) / lambda_rt - F(x) - h(x),
/// where F is the joint cdf on the diagonal and h the correction from events
/// where another prosumer's surplus covers part of the shortfall.
class FollowerModel {
 public:
  FollowerModel(const GameScenario& scenario, std::size_t draws, std::uint64_t seed);

  const GameScenario& scenario() const noexcept { return scenario_; }
  RhoBounds bounds() const;

  /// E[u'(d0 + C_i - x)].
  double expected_marginal_utility(double x) const;
  /// (rho - E[u'(d0 + C_i - x)]) / lambda_rt.
  double marginal_gain(double rho, double x) const;
  /// F(x, ..., x). For a point mass the left limit is used on [0, cbar].
  double joint_cdf(double x) const;
  Estimate h_estimate(double x) const;
  double h(double x) const { return h_estimate(x).mean; }
  /// F(x) + h(x); for iid capacities both terms come from the same draws.
  double shortfall_slope(double x) const;
  double g(double rho, double x) const;

  /// Symmetric equilibrium offer. Ties are resolved to the largest offer.
  double response(double rho, double tol_x = 1e-8, int max_iterations = 200,
                  int* iterations = nullptr) const;

 private:
  bool uses_marginal_samples() const noexcept;
  bool uses_other_samples() const noexcept;

  GameScenario scenario_;
  std::size_t draws_ = 0;
  std::vector<double> marginal_;  // C_i per draw, general utility only
  std::vector<double> others_;    // C_j for j != i, row-major draws x (N-1)
};

struct FollowerFixedPointSpec {
  GameScenario scenario;
  double rho = 0.0;
  double tol_x = 1e-8;
  std::size_t draws = kDefaultDraws;
  std::uint64_t seed = kDefaultSeed;
  int max_iterations = 200;
};

/// Unique symmetric Nash offer x*(rho).
double symmetric_follower_response(const FollowerFixedPointSpec& spec);

/// Monte Carlo estimate of h at symmetric offers x. Zero unless capacities
/// are iid with N >= 2.
Estimate h_correction(const GameScenario& scenario, double x, std::size_t draws, std::uint64_t seed);

enum class FollowerRegime { FiniteN, MeanField };

struct EquilibriumDiagnostics {
  int grid_points = 0;
  int golden_iterations = 0;
  int follower_iterations = 0;  // at rho*
  double follower_residual = 0.0;  // |g(x*)| when x* is interior, else 0
  bool concavity_ok = true;       // profit second differences <= 0 on the grid
  bool multiple_maxima = false;   // separated grid maxima within tolerance
  std::vector<std::string> warnings;
};

struct EquilibriumResult {
  double rho_star = 0.0;
  double x_star = 0.0;
  double aggregate_x = 0.0;
  double leader_profit = 0.0;
  std::optional<double> beta;  // mean-field regime only
  EquilibriumDiagnostics diagnostics;
};

/// Leader's pricing problem: maximise (lambda_da - rho) N x*(rho) over
/// rho in [max(0, rho_min), min(lambda_da, rho_max)] with a uniform grid and
/// golden-section refinement around the best grid point.
EquilibriumResult stackelberg_solve(const GameScenario& scenario, const SolverOptions& options = {},
                                    FollowerRegime regime = FollowerRegime::FiniteN);

struct MeanFieldSolution {
  double beta = 0.0;
  double x_star = 0.0;
  double residual_offer = 0.0;  // |beta F(x*) - gain(x*)| when x* is interior
  double residual_beta = 0.0;   // |beta - formula(x*)|
  int iterations = 0;
};

enum class MeanFieldMethod { Bisection, DampedIteration };

/// beta(x) = (x - E C)^+ / E[(x - C)^+], taken as 0 when the denominator is 0.
double meanfield_beta(const CapacityModel& capacity, double x);

/// Joint solution of beta F(x*) = (rho - E[u'(d0 + C_i - x*)]) / lambda_rt and
/// beta = beta(x*). Bisection finds the greatest root of the reduced residual
/// beta(x) F(x) - gain(x), which is nondecreasing in x. DampedIteration
/// alternates x <- best response to beta and beta <- (beta + beta(x)) / 2.
MeanFieldSolution meanfield_solve(const GameScenario& scenario, double rho, double tol = 1e-8,
                                  MeanFieldMethod method = MeanFieldMethod::Bisection,
                                  const SolverOptions& options = {});

/// Empirical (sum (x - C_j))^+ / sum (x - C_j)^+ (ratio of sample means over
/// draws) for each N in n_values. Ratios with a zero denominator are 0.
std::vector<double> mf_ratio_limit_check(const GameScenario& scenario, double x,
                                         std::span<const int> n_values, std::size_t draws,
                                         std::uint64_t seed);

}  // namespace dersim
