#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dersim/capacity.hpp"
#include "dersim/errors.hpp"

using namespace dersim;

namespace {

// Kolmogorov-Smirnov statistic of a sample against U[a, b].
double ks_uniform(std::vector<double> v, double a, double b) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double f = (v[k] - a) / (b - a);
    d = std::max({d, (k + 1) / n - f, f - k / n});
  }
  return d;
}

}  // namespace

TEST_CASE("uniform marginal cdf") {
  const auto m = CapacityModel::dependent_uniform(10.0, 3.3);
  CHECK(cdf_marginal(m, 10.0) == doctest::Approx(0.5));
  CHECK(cdf_marginal(m, 10.0 - kSqrt3 * 3.3) == doctest::Approx(0.0));
  CHECK(cdf_marginal(m, 5.7131) == doctest::Approx(0.125).epsilon(1e-4));
  CHECK(cdf_marginal(m, -1.0) == 0.0);
  CHECK(cdf_marginal(m, 100.0) == 1.0);
  CHECK_THROWS_AS(cdf_marginal(CapacityModel::deterministic(5.0), 1.0), UnsupportedOperation);
}

TEST_CASE("cdf matches numeric integration of the density") {
  const auto m = CapacityModel::iid_uniform(10.0, 3.3);
  const double a = m.support_min();
  const double dens = 1.0 / (m.support_max() - a);
  for (double c : {5.0, 7.5, 12.0, 15.0}) {
    const int n = 10000;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double t = a + (c - a) * (k + 0.5) / n;
      acc += (t <= m.support_max() ? dens : 0.0) * (c - a) / n;
    }
    CHECK(cdf_marginal(m, c) == doctest::Approx(acc).epsilon(1e-9));
  }
}

TEST_CASE("expected shortfall closed form") {
  const auto m = CapacityModel::dependent_uniform(10.0, 3.3);
  const double l = kSqrt3 * 3.3;
  CHECK(expected_shortfall(m, 10.0) == doctest::Approx(l / 4.0));
  CHECK(expected_shortfall(m, 10.0 - l) == doctest::Approx(0.0));
  CHECK(expected_shortfall(m, 20.0) == doctest::Approx(10.0));
  CHECK(expected_shortfall(CapacityModel::deterministic(8.0), 9.0) == doctest::Approx(1.0));
  CHECK(expected_shortfall(CapacityModel::deterministic(8.0), 7.0) == 0.0);
}

TEST_CASE("capacity validation") {
  CHECK_THROWS_AS(CapacityModel::dependent_uniform(10.0, 6.0), ValidationError);  // support below 0
  CHECK_THROWS_AS(CapacityModel::iid_uniform(10.0, 3.3, 12.0), ValidationError);  // cbar inside support
  CHECK_THROWS_AS(CapacityModel::iid_uniform(10.0, 0.0), ValidationError);
  CHECK_THROWS_AS(CapacityModel::deterministic(-1.0), ValidationError);
  CHECK(CapacityModel::iid_uniform(10.0, 3.3).cbar == doctest::Approx(10.0 + kSqrt3 * 3.3));
  CHECK(capacity_kind_from_string("iid_uniform") == CapacityKind::IidUniform);
  CHECK_THROWS_AS(capacity_kind_from_string("gaussian"), ValidationError);
}

TEST_CASE("sampling") {
  SUBCASE("deterministic is a point mass") {
    for (const auto& s : sample(CapacityModel::deterministic(7.0), 3, 99, 50)) {
      CHECK(s.values == std::vector<double>{7.0, 7.0, 7.0});
    }
  }
  SUBCASE("dependent draws are shared") {
    for (const auto& s : sample(CapacityModel::dependent_uniform(10.0, 3.3), 2, 5, 1000)) {
      CHECK(s.values[0] == s.values[1]);
    }
  }
  SUBCASE("iid mean and marginal law") {
    const auto m = CapacityModel::iid_uniform(10.0, 3.3);
    const CapacitySampler sampler(m, 1234);
    const std::size_t draws = 1'000'000;
    double sum = 0.0;
    std::vector<double> col0, col1;
    for (std::size_t k = 0; k < draws; ++k) {
      sum += sampler.value(k, 0);
      if (k < 20000) {
        col0.push_back(sampler.value(k, 0));
        col1.push_back(sampler.value(k, 1));
      }
    }
    CHECK(std::abs(sum / draws - 10.0) < 0.02);
    // 1% critical value of the one-sample KS statistic is 1.63 / sqrt(n).
    const double crit = 1.63 / std::sqrt(20000.0);
    CHECK(ks_uniform(col0, m.support_min(), m.support_max()) < crit);
    CHECK(ks_uniform(col1, m.support_min(), m.support_max()) < crit);
    double cov = 0.0;
    for (std::size_t k = 0; k < col0.size(); ++k) cov += (col0[k] - 10.0) * (col1[k] - 10.0);
    CHECK(std::abs(cov / col0.size()) < 0.15);  // var is 10.89
  }
  SUBCASE("draws depend only on seed, draw and prosumer") {
    const auto m = CapacityModel::iid_uniform(10.0, 3.3);
    const CapacitySampler a(m, 42), b(m, 42), c(m, 43);
    CHECK(a.value(17, 3) == b.value(17, 3));
    CHECK(a.value(17, 3) != c.value(17, 3));
    std::vector<double> row(4);
    a.fill(17, row);
    CHECK(row[3] == a.value(17, 3));
  }
}
