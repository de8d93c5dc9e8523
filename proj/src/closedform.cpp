#include "dersim/closedform.hpp"

#include <cmath>
#include <sstream>

#include "dersim/errors.hpp"

namespace dersim::closedform {

namespace {

constexpr double kBandSlack = 1e-12;

}  // namespace

std::pair<double, double> sigma_band(const UniformLinearParams& p) {
  const double lower = p.lambda_rt * p.mu / (2.0 * kSqrt3 * (p.lambda_da - p.gamma + 0.5 * p.lambda_rt));
  return {lower, p.mu / kSqrt3};
}

void check_admissible(const UniformLinearParams& p) {
  if (!(p.gamma > 0.0) || !(p.mu > 0.0) || !(p.sigma > 0.0) || !(p.lambda_rt > 0.0) ||
      p.n_prosumers < 1) {
    throw AdmissibilityError("closed form: need gamma, mu, sigma, lambda_rt > 0 and N >= 1");
  }
  if (!(p.lambda_da > p.gamma)) {
    throw AdmissibilityError("closed form: lambda_da must exceed gamma");
  }
  const auto [lo, hi] = sigma_band(p);
  std::ostringstream os;
  if (p.sigma < lo * (1.0 - kBandSlack)) {
    os << "closed form: sigma = " << p.sigma << " below lower bound " << lo
       << " = lambda_rt mu / (2 sqrt(3) (lambda_da - gamma + lambda_rt/2))";
    throw AdmissibilityError(os.str());
  }
  if (p.sigma > hi * (1.0 + kBandSlack)) {
    os << "closed form: sigma = " << p.sigma << " above upper bound " << hi << " = mu / sqrt(3)";
    throw AdmissibilityError(os.str());
  }
  const double l = p.half_width();
  const double rho_star = 0.5 * (p.lambda_da + p.gamma) - p.lambda_rt * (p.mu - l) / (4.0 * l);
  if (rho_star > (p.gamma + p.lambda_rt) * (1.0 + kBandSlack)) {
    os << "closed form: rho* = " << rho_star << " above rho_max = gamma + lambda_rt = " << p.gamma + p.lambda_rt
       << " (offer would exceed mu + sqrt(3) sigma)";
    throw AdmissibilityError(os.str());
  }
}

UniformEquilibrium uniform_equilibrium(const UniformLinearParams& p) {
  check_admissible(p);
  const double l = p.half_width();
  UniformEquilibrium eq;
  eq.x_star_fn = {p.mu - l, 2.0 * l / p.lambda_rt, p.gamma};
  eq.rho_star = 0.5 * (p.lambda_da + p.gamma) - p.lambda_rt * (p.mu - l) / (4.0 * l);
  return eq;
}

double inverse_supply_aggregator(const UniformLinearParams& p, double X) {
  const double l = p.half_width();
  return p.lambda_rt * (2.0 * X / p.n_prosumers - p.mu + l) / (2.0 * l) + p.gamma;
}

std::pair<double, double> aggregator_effective_range(const UniformLinearParams& p) {
  const double l = p.half_width();
  return {0.5 * p.n_prosumers * (p.mu - l), 0.5 * p.n_prosumers * (p.mu + l)};
}

double inverse_supply_prosumer(const UniformLinearParams& p, double x) {
  const double l = p.half_width();
  return p.lambda_rt * (x - p.mu + l) / (2.0 * l) + p.gamma;
}

double direct_offer(const UniformLinearParams& p, double price) {
  const double l = p.half_width();
  return p.mu - l + 2.0 * l * (price - p.gamma) / p.lambda_rt;
}

double aggregated_offer(const UniformLinearParams& p, double price) {
  return 0.5 * p.n_prosumers * direct_offer(p, price);
}

UniformCosts uniform_costs(const UniformLinearParams& p, double kappa, double demand_per_prosumer) {
  check_admissible(p);
  if (!(kappa > p.gamma)) {
    throw AdmissibilityError("closed form: generator cost kappa must exceed gamma");
  }
  const double l = p.half_width();
  UniformCosts c;
  c.q_star = direct_offer(p, kappa);
  if (c.q_star > p.mu + l * (1.0 + kBandSlack)) {
    throw AdmissibilityError("closed form: cleared quantity q* exceeds the capacity support mu + sqrt(3) sigma");
  }
  if (!(demand_per_prosumer >= c.q_star)) {
    throw AdmissibilityError("closed form: demand per prosumer must cover the cleared DER quantity q*");
  }
  c.q_agg_star = 0.5 * c.q_star;
  const double margin = kappa - p.gamma + p.lambda_rt * (p.mu - l) / (2.0 * l) -
                        c.q_star * p.lambda_rt / (4.0 * l);
  c.c_noder = kappa * demand_per_prosumer;
  c.c_agg = c.c_noder - 0.5 * c.q_star * margin;
  c.c_direct = c.c_noder - c.q_star * margin;
  c.poag = c.c_agg / c.c_direct;
  return c;
}

}  // namespace dersim::closedform
