#include "dersim/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dersim/errors.hpp"

namespace dersim {

namespace {

constexpr double kSupportSlack = 1e-12;

CapacityModel make_uniform(CapacityKind kind, double mu, double sigma, std::optional<double> cbar) {
  CapacityModel m;
  m.kind = kind;
  m.mu = mu;
  m.sigma = sigma;
  m.cbar = cbar.value_or(mu + kSqrt3 * sigma);
  m.validate();
  return m;
}

}  // namespace

std::string_view to_string(CapacityKind kind) {
  switch (kind) {
    case CapacityKind::Deterministic:
      return "deterministic";
    case CapacityKind::DependentUniform:
      return "dependent_uniform";
    case CapacityKind::IidUniform:
      return "iid_uniform";
  }
  return "unknown";
}

CapacityKind capacity_kind_from_string(std::string_view name) {
  if (name == "deterministic") return CapacityKind::Deterministic;
  if (name == "dependent_uniform") return CapacityKind::DependentUniform;
  if (name == "iid_uniform") return CapacityKind::IidUniform;
  throw ValidationError("unknown capacity kind '" + std::string(name) +
                        "' (expected deterministic, dependent_uniform or iid_uniform)");
}

CapacityModel CapacityModel::deterministic(double cbar) {
  CapacityModel m;
  m.kind = CapacityKind::Deterministic;
  m.cbar = cbar;
  m.mu = cbar;
  m.validate();
  return m;
}

CapacityModel CapacityModel::dependent_uniform(double mu, double sigma, std::optional<double> cbar) {
  return make_uniform(CapacityKind::DependentUniform, mu, sigma, cbar);
}

CapacityModel CapacityModel::iid_uniform(double mu, double sigma, std::optional<double> cbar) {
  return make_uniform(CapacityKind::IidUniform, mu, sigma, cbar);
}

double CapacityModel::support_min() const noexcept {
  return is_uniform() ? std::max(0.0, mu - half_width()) : cbar;
}

double CapacityModel::support_max() const noexcept {
  return is_uniform() ? std::min(cbar, mu + half_width()) : cbar;
}

void CapacityModel::validate() const {
  if (!std::isfinite(cbar) || cbar < 0.0) {
    throw ValidationError("capacity: cbar must be finite and >= 0");
  }
  if (!is_uniform()) {
    return;
  }
  if (!std::isfinite(mu) || !std::isfinite(sigma) || sigma < 0.0) {
    throw ValidationError("capacity: mu and sigma must be finite, sigma >= 0");
  }
  if (sigma == 0.0) {
    throw ValidationError(
        "capacity: sigma = 0 on a uniform kind; use kind 'deterministic' with cbar = mu");
  }
  const double scale = std::max({1.0, std::abs(mu), cbar});
  const double lo = mu - kSqrt3 * sigma;
  const double hi = mu + kSqrt3 * sigma;
  if (lo < -kSupportSlack * scale) {
    throw ValidationError("capacity: support lower end mu - sqrt(3) sigma = " + std::to_string(lo) +
                          " is negative");
  }
  if (hi > cbar + kSupportSlack * scale) {
    throw ValidationError("capacity: support upper end mu + sqrt(3) sigma = " + std::to_string(hi) +
                          " exceeds cbar = " + std::to_string(cbar));
  }
}

double cdf_marginal(const CapacityModel& model, double c) {
  if (!model.is_uniform()) {
    throw UnsupportedOperation("cdf_marginal: deterministic capacity has a step cdf");
  }
  const double width = 2.0 * model.half_width();
  return std::clamp((c - model.mu + model.half_width()) / width, 0.0, 1.0);
}

double expected_shortfall(const CapacityModel& model, double x) {
  if (!model.is_uniform()) {
    return std::max(0.0, x - model.cbar);
  }
  const double l = model.half_width();
  const double lo = model.mu - l;
  if (x <= lo) {
    return 0.0;
  }
  if (x >= model.mu + l) {
    return x - model.mu;
  }
  return (x - lo) * (x - lo) / (4.0 * l);
}

CapacitySampler::CapacitySampler(const CapacityModel& model, std::uint64_t seed)
    : model_(model), seed_(seed), rng_(seed) {
  model_.validate();
}

double CapacitySampler::value(std::size_t draw, std::size_t j) const noexcept {
  switch (model_.kind) {
    case CapacityKind::Deterministic:
      return model_.cbar;
    case CapacityKind::DependentUniform:
      j = 0;
      break;
    case CapacityKind::IidUniform:
      break;
  }
  const double l = model_.half_width();
  return model_.mu - l + 2.0 * l * rng_.uniform(draw, j);
}

void CapacitySampler::fill(std::size_t draw, std::span<double> out) const noexcept {
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = value(draw, j);
  }
}

std::vector<CapacitySample> sample(const CapacityModel& model, std::size_t n, std::uint64_t seed,
                                   std::size_t draws) {
  if (n == 0 || draws == 0) {
    throw ValidationError("sample: n and draws must be >= 1");
  }
  const CapacitySampler sampler(model, seed);
  std::vector<CapacitySample> out(draws);
  for (std::size_t k = 0; k < draws; ++k) {
    out[k].values.resize(n);
    sampler.fill(k, out[k].values);
  }
  return out;
}

}  // namespace dersim
