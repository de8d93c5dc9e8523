#pragma once

#include <utility>

#include "dersim/capacity.hpp"

namespace dersim::closedform {

/// Fully dependent uniform capacities with linear utility: the case where
/// the equilibrium, the offer curves and the procurement costs are affine or
/// quadratic in closed form.
struct UniformLinearParams {
  double gamma = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double lambda_da = 0.0;
  double lambda_rt = 0.0;
  int n_prosumers = 1;

  double half_width() const noexcept { return kSqrt3 * sigma; }
};

/// Admissible sigma band [lambda_rt mu / (2√3 (lambda_da - gamma + lambda_rt/2)), mu/√3].
std::pair<double, double> sigma_band(const UniformLinearParams& p);

/// Throws AdmissibilityError naming the violated bound: the sigma band and
/// rho* <= gamma + lambda_rt (an interior offer at rho*).
void check_admissible(const UniformLinearParams& p);

/// x*(rho) = mu - √3 sigma + (2 / lambda_rt)(rho - gamma) √3 sigma for rho >= gamma.
struct AffineOffer {
  double intercept = 0.0;  // x*(gamma)
  double slope = 0.0;      // d x* / d rho
  double gamma = 0.0;
  double operator()(double rho) const noexcept { return intercept + slope * (rho - gamma); }
};

struct UniformEquilibrium {
  double rho_star = 0.0;
  AffineOffer x_star_fn;
  double x_star() const noexcept { return x_star_fn(rho_star); }
};

UniformEquilibrium uniform_equilibrium(const UniformLinearParams& p);

/// Aggregator offer price for aggregate quantity X:
///   p_A(X) = lambda_rt (2X/N - mu + √3 sigma) / (2√3 sigma) + gamma.
double inverse_supply_aggregator(const UniformLinearParams& p, double X);

/// Quantity range [N(mu - √3 sigma)/2, N(mu + √3 sigma)/2] on which p_A is used
/// without extrapolation.
std::pair<double, double> aggregator_effective_range(const UniformLinearParams& p);

/// Direct per-prosumer offer price p(x) = lambda_rt (x - mu + √3 sigma) / (2√3 sigma) + gamma.
double inverse_supply_prosumer(const UniformLinearParams& p, double x);

/// Quantity one prosumer offers at wholesale price `price` (inverse of p(x)).
double direct_offer(const UniformLinearParams& p, double price);

/// Aggregated supply X at wholesale price `price` (inverse of p_A).
double aggregated_offer(const UniformLinearParams& p, double price);

/// Procurement costs with one linear generator of marginal cost kappa. All
/// costs are per prosumer (total / N).
struct UniformCosts {
  double c_agg = 0.0;
  double c_direct = 0.0;
  double c_noder = 0.0;
  double q_star = 0.0;      // direct DER cleared per prosumer
  double q_agg_star = 0.0;  // aggregated DER cleared per prosumer, q_star / 2
  double poag = 0.0;
};

UniformCosts uniform_costs(const UniformLinearParams& p, double kappa, double demand_per_prosumer);

}  // namespace dersim::closedform
