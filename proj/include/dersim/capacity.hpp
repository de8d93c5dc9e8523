#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dersim/rng.hpp"

namespace dersim {

inline constexpr double kSqrt3 = 1.7320508075688772935;

enum class CapacityKind { Deterministic, DependentUniform, IidUniform };

std::string_view to_string(CapacityKind kind);
CapacityKind capacity_kind_from_string(std::string_view name);

/// Joint law of the prosumer DER capacities C in [0, cbar]^N. Uniform kinds
/// have marginals uniform on [mu - √3 sigma, mu + √3 sigma]; DependentUniform
/// draws one value shared by every prosumer, IidUniform draws independently.
struct CapacityModel {
  CapacityKind kind = CapacityKind::Deterministic;
  double cbar = 0.0;
  double mu = 0.0;
  double sigma = 0.0;

  static CapacityModel deterministic(double cbar);
  /// `cbar` defaults to the top of the support, mu + √3 sigma.
  static CapacityModel dependent_uniform(double mu, double sigma, std::optional<double> cbar = {});
  static CapacityModel iid_uniform(double mu, double sigma, std::optional<double> cbar = {});

  bool is_uniform() const noexcept { return kind != CapacityKind::Deterministic; }
  double half_width() const noexcept { return is_uniform() ? kSqrt3 * sigma : 0.0; }
  double support_min() const noexcept;
  double support_max() const noexcept;
  double mean() const noexcept { return is_uniform() ? mu : cbar; }

  /// Throws ValidationError when an invariant fails.
  void validate() const;
};

/// Marginal cdf of C_i. Uniform kinds only; Deterministic throws
/// UnsupportedOperation because its cdf is a step.
double cdf_marginal(const CapacityModel& model, double c);

/// E[(x - C_i)^+] for the marginal law, in closed form.
double expected_shortfall(const CapacityModel& model, double x);

struct CapacitySample {
  std::vector<double> values;
};

/// Reproducible capacity draws. Draw k for prosumer j is a pure function of
/// (seed, k, j).
class CapacitySampler {
 public:
  CapacitySampler(const CapacityModel& model, std::uint64_t seed);

  const CapacityModel& model() const noexcept { return model_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Capacity of prosumer j in draw k.
  double value(std::size_t draw, std::size_t j) const noexcept;
  void fill(std::size_t draw, std::span<double> out) const noexcept;

 private:
  CapacityModel model_;
  std::uint64_t seed_;
  CounterRng rng_;
};

std::vector<CapacitySample> sample(const CapacityModel& model, std::size_t n, std::uint64_t seed,
                                   std::size_t draws);

}  // namespace dersim
