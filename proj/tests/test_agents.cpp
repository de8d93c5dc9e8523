#include <doctest.h>

#include <cmath>

#include "dersim/agents.hpp"
#include "dersim/errors.hpp"
#include "dersim/penalty.hpp"

using namespace dersim;

TEST_CASE("prosumer payoff with deterministic capacity") {
  GameScenario s;
  s.n_prosumers = 1;
  s.d0 = 11.0;
  s.capacity = CapacityModel::deterministic(10.0);
  s.utility = UtilitySpec::linear(2.5);
  s.lambda_da = 4.0;
  s.lambda_rt = 4.0;
  CHECK(prosumer_payoff(s, 3.0, 10.0, 10.0, kDefaultDraws, 1).mean == doctest::Approx(57.5));
  CHECK(prosumer_payoff(s, 3.0, 0.0, 10.0, kDefaultDraws, 1).mean == doctest::Approx(2.5 * 21.0));
  CHECK_THROWS_AS(prosumer_payoff(s, 3.0, 10.5, 10.0, kDefaultDraws, 1), ValidationError);
}

TEST_CASE("prosumer payoff with uniform capacity") {
  GameScenario s;
  s.n_prosumers = 2;
  s.d0 = 20.0;
  s.capacity = CapacityModel::dependent_uniform(10.0, 3.3);
  s.utility = UtilitySpec::linear(2.5);
  s.lambda_da = 4.0;
  s.lambda_rt = 4.0;
  const double xmin = s.capacity.support_min();
  SUBCASE("zero offer") {
    CHECK(prosumer_payoff(s, 3.0, 0.0, 5.0, kDefaultDraws, 2).mean == doctest::Approx(2.5 * 30.0));
  }
  SUBCASE("offer at the support minimum, rho = gamma") {
    const auto e = prosumer_payoff(s, 2.5, xmin, xmin, kDefaultDraws, 2);
    CHECK(std::abs(e.mean - 2.5 * 30.0) <= 3.0 * e.std_error + 1e-9);
  }
  SUBCASE("linear utility with an interior offer") {
    const double x = 11.0;
    const double exact = 3.0 * x + 2.5 * (20.0 + 10.0 - x) - 4.0 * expected_shortfall(s.capacity, x);
    const auto e = prosumer_payoff(s, 3.0, x, x, kDefaultDraws, 4);
    CHECK(std::abs(e.mean - exact) <= 3.0 * e.std_error + 1e-9);
  }
}

TEST_CASE("tabulated utility") {
  const auto u = UtilitySpec::tabulated({{0.0, 3.0}, {10.0, 2.0}});
  CHECK(u.marginal(-1.0) == 3.0);
  CHECK(u.marginal(5.0) == doctest::Approx(2.5));
  CHECK(u.marginal(20.0) == 2.0);
  CHECK(u.value(0.0) == doctest::Approx(0.0));
  CHECK(u.value(10.0) == doctest::Approx(25.0));
  CHECK(u.value(12.0) == doctest::Approx(29.0));
  CHECK(u.value(-2.0) == doctest::Approx(-6.0));
  CHECK_THROWS_AS(UtilitySpec::tabulated({{0.0, 1.0}, {1.0, 2.0}}), ValidationError);

  GameScenario s;
  s.d0 = 40.0;
  s.capacity = CapacityModel::iid_uniform(10.0, 3.3);
  s.utility = u;
  s.lambda_rt = 4.0;
  const auto m = expected_marginal_utility(s, 5.0, 200000, 3);
  CHECK(m.mean == doctest::Approx(2.0));  // d0 + C - x > 10 always
}

TEST_CASE("aggregator profit") {
  GameScenario s;
  s.lambda_da = 4.0;
  CHECK(aggregator_profit(s, 4.0, 30.0) == 0.0);
  CHECK(aggregator_profit(s, 2.5, 0.0) == 0.0);
  CHECK(aggregator_profit(s, 2.50045373, 4.285529042) == doctest::Approx(6.42635).epsilon(1e-5));
}

TEST_CASE("scenario assumptions") {
  GameScenario s;
  s.n_prosumers = 2;
  s.d0 = 12.0;
  s.capacity = CapacityModel::dependent_uniform(10.0, 3.3);
  s.utility = UtilitySpec::linear(2.5);
  s.lambda_da = 4.0;
  s.lambda_rt = 4.0;
  try {
    s.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("d0 > cbar") != std::string::npos);
  }
  s.d0 = 20.0;
  CHECK_NOTHROW(s.validate());
  s.lambda_rt = -1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}
