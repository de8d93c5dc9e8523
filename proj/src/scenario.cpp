#include "dersim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dersim/errors.hpp"

namespace dersim {

UtilitySpec UtilitySpec::linear(double gamma) {
  UtilitySpec u;
  u.kind = UtilityKind::Linear;
  u.gamma = gamma;
  u.validate();
  return u;
}

UtilitySpec UtilitySpec::tabulated(std::vector<std::pair<double, double>> points) {
  UtilitySpec u;
  u.kind = UtilityKind::Tabulated;
  u.marginal_points = std::move(points);
  u.validate();
  return u;
}

void UtilitySpec::validate() const {
  if (kind == UtilityKind::Linear) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw ValidationError("utility: linear gamma must be finite and > 0");
    }
    return;
  }
  const auto& p = marginal_points;
  if (p.size() < 2) {
    throw ValidationError("utility: tabulated marginal needs at least two points");
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!std::isfinite(p[k].first) || !std::isfinite(p[k].second) || p[k].second < 0.0) {
      throw ValidationError("utility: tabulated marginal values must be finite and >= 0");
    }
    if (k > 0 && !(p[k].first > p[k - 1].first)) {
      throw ValidationError("utility: tabulated abscissae must be strictly increasing");
    }
    if (k > 0 && p[k].second > p[k - 1].second) {
      throw ValidationError("utility: tabulated marginal must be nonincreasing (concave u)");
    }
  }
}

double UtilitySpec::marginal(double z) const {
  if (kind == UtilityKind::Linear) {
    return gamma;
  }
  const auto& p = marginal_points;
  if (z <= p.front().first) return p.front().second;
  if (z >= p.back().first) return p.back().second;
  const auto it = std::upper_bound(p.begin(), p.end(), z,
                                   [](double v, const auto& pt) { return v < pt.first; });
  const auto& [z1, m1] = *it;
  const auto& [z0, m0] = *(it - 1);
  return m0 + (m1 - m0) * (z - z0) / (z1 - z0);
}

double UtilitySpec::value(double z) const {
  if (kind == UtilityKind::Linear) {
    return gamma * z;
  }
  // Signed integral of the marginal from the first breakpoint to t.
  auto primitive = [this](double t) {
    const auto& p = marginal_points;
    if (t <= p.front().first) {
      return p.front().second * (t - p.front().first);
    }
    double acc = 0.0;
    for (std::size_t k = 1; k < p.size() && p[k - 1].first < t; ++k) {
      const double lo = p[k - 1].first;
      const double hi = std::min(t, p[k].first);
      acc += 0.5 * (marginal(lo) + marginal(hi)) * (hi - lo);
    }
    if (t > p.back().first) {
      acc += p.back().second * (t - p.back().first);
    }
    return acc;
  };
  return primitive(z) - primitive(0.0);
}

void GameScenario::validate() const {
  if (n_prosumers < 1) {
    throw ValidationError("scenario: n_prosumers must be >= 1");
  }
  capacity.validate();
  utility.validate();
  if (!(d0 > capacity.cbar)) {
    throw ValidationError("scenario: nominal demand d0 = " + std::to_string(d0) +
                          " must exceed installed capacity cbar = " + std::to_string(capacity.cbar) +
                          " (assumption d0 > cbar)");
  }
  if (!(lambda_da >= 0.0) || !(lambda_rt >= 0.0) || !std::isfinite(lambda_da) ||
      !std::isfinite(lambda_rt)) {
    throw ValidationError("scenario: prices lambda_da and lambda_rt must be finite and >= 0");
  }
}

}  // namespace dersim
