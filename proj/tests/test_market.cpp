#include <doctest.h>

#include <cmath>
#include <vector>

#include "dersim/errors.hpp"
#include "dersim/market.hpp"

using namespace dersim;

namespace {

GameScenario fig5(double sigma = 3.3, int n = 10) {
  GameScenario s;
  s.n_prosumers = n;
  s.d0 = 100.0;
  s.capacity = CapacityModel::dependent_uniform(10.0, sigma);
  s.utility = UtilitySpec::linear(2.5);
  s.lambda_da = 4.0;
  s.lambda_rt = 4.0;
  return s;
}

GeneratorSpec linear_gen(double kappa) {
  GeneratorSpec g;
  g.kappa = kappa;
  return g;
}

// Oracle for one linear generator plus an affine DER offer: minimise
// kappa (D - q) + integral of the DER curve over q on a dense grid.
double quadratic_oracle(const SupplyCurve& c, double kappa, double demand, double* q_best) {
  double best = INFINITY;
  const double top = std::min(demand, c.quantity_cap);
  for (int k = 0; k <= 200000; ++k) {
    const double q = top * k / 200000.0;
    const double v = kappa * (demand - q) + c.integral(q);
    if (v < best) best = v, *q_best = q;
  }
  return best;
}

}  // namespace

TEST_CASE("supply curve basics") {
  const auto c = SupplyCurve::affine(SupplyCurveKind::ProsumerAffine, 1.0, 0.5, 10.0);
  CHECK(c.price_at(4.0) == doctest::Approx(3.0));
  CHECK(c.quantity_at(3.0) == doctest::Approx(4.0));
  CHECK(c.quantity_at(0.5) == 0.0);
  CHECK(c.quantity_at(100.0) == doctest::Approx(10.0));
  CHECK(c.integral(4.0) == doctest::Approx(4.0 + 4.0));
  CHECK_THROWS_AS(SupplyCurve::tabulated({{0.0, 2.0}, {1.0, 1.0}}, 1.0), ValidationError);
  CHECK_THROWS_AS(SupplyCurve::tabulated({{0.0, 1.0}, {2.0, 1.0}}, 1.0), ValidationError);
}

TEST_CASE("generator cost") {
  GeneratorSpec g;
  g.segments = {{10.0, 3.0}, {20.0, 3.5}};
  CHECK(g.cost(5.0) == doctest::Approx(15.0));
  CHECK(g.cost(15.0) == doctest::Approx(47.5));
  CHECK(g.cost(25.0) == doctest::Approx(82.5));
  g.segments = {{10.0, 3.5}, {20.0, 3.0}};
  CHECK_THROWS_AS(g.validate(), ValidationError);
  GeneratorSpec h;
  h.qmin = 5.0;
  h.qmax = 4.0;
  CHECK_THROWS_AS(h.validate(), ValidationError);
}

TEST_CASE("supply curves from the game") {
  const auto s = fig5();
  const double l = kSqrt3 * 3.3;
  const auto agg = build_supply_curve_aggregated(s);
  const auto direct = build_supply_curve_direct(s);
  CHECK(agg.kind == SupplyCurveKind::AggregatorAffine);
  CHECK(direct.kind == SupplyCurveKind::ProsumerAffine);
  CHECK((agg.breakpoints[1].second - agg.breakpoints[0].second) / agg.breakpoints[1].first ==
        doctest::Approx(4.0 / (10 * l)));
  CHECK(direct.price_at(10 * (10.0 - l)) == doctest::Approx(2.5));
  CHECK(direct.price_at(10 * (10.0 + l)) == doctest::Approx(6.5));
  CHECK(agg.price_at(5.0 * (10.0 - l)) == doctest::Approx(2.5));

  SUBCASE("numeric curves agree where the closed form holds") {
    CurveOptions o;
    o.method = CurveMethod::Numeric;
    o.price_points = 129;
    const auto agg_n = build_supply_curve_aggregated(s, o);
    const auto direct_n = build_supply_curve_direct(s, o);
    CHECK(agg_n.kind == SupplyCurveKind::Tabulated);
    for (double p = 4.05; p <= 6.4; p += 0.1) {
      CHECK(agg_n.quantity_at(p) == doctest::Approx(agg.quantity_at(p)).epsilon(1e-3));
    }
    for (double p = 2.5; p <= 6.4; p += 0.1) {
      CHECK(direct_n.quantity_at(p) == doctest::Approx(direct.quantity_at(p)).epsilon(1e-5));
    }
    CHECK(agg_n.quantity_at(2.4) == 0.0);
    CHECK(direct_n.quantity_at(2.4) == 0.0);
  }
  SUBCASE("deterministic capacity offers everything above gamma") {
    GameScenario d = s;
    d.capacity = CapacityModel::deterministic(8.0);
    d.d0 = 20.0;
    const auto c = build_supply_curve_aggregated(d);
    CHECK(c.kind == SupplyCurveKind::Tabulated);
    CHECK(c.quantity_at(2.4) == 0.0);
    for (double p : {2.6, 3.0, 5.0}) CHECK(c.quantity_at(p) == doctest::Approx(80.0));
  }
  SUBCASE("closed form refused where it does not apply") {
    GameScenario d = s;
    d.capacity = CapacityModel::iid_uniform(10.0, 3.3);
    CurveOptions o;
    o.method = CurveMethod::ClosedForm;
    CHECK_THROWS_AS(build_supply_curve_direct(d, o), ValidationError);
  }
}

TEST_CASE("market clearing") {
  const auto s = fig5();
  const std::vector<GeneratorSpec> gens{linear_gen(3.25)};
  SUBCASE("no DER") {
    const auto r = clear_market({gens, 100.0, std::nullopt, DispatchMode::NoDer});
    CHECK(r.total_cost / 10 == doctest::Approx(32.5));
    CHECK(r.clearing_price == doctest::Approx(3.25));
    CHECK(r.cleared_generator.at(0) == doctest::Approx(100.0));
  }
  SUBCASE("aggregated") {
    const auto agg = build_supply_curve_aggregated(s);
    const auto r = clear_market({gens, 100.0, agg, DispatchMode::Aggregated});
    CHECK(r.cleared_der / 10 == doctest::Approx(3.2138226).epsilon(1e-7));
    CHECK(r.total_cost / 10 == doctest::Approx(28.88590778).epsilon(1e-9));
    CHECK(r.clearing_price == doctest::Approx(3.25));
    double q = 0.0;
    CHECK(r.total_cost == doctest::Approx(quadratic_oracle(agg, 3.25, 100.0, &q)).epsilon(1e-8));
    CHECK(r.cleared_der == doctest::Approx(q).epsilon(1e-4));
  }
  SUBCASE("direct") {
    const auto direct = build_supply_curve_direct(s);
    const auto r = clear_market({gens, 100.0, direct, DispatchMode::Direct});
    CHECK(r.cleared_der / 10 == doctest::Approx(6.427645209).epsilon(1e-8));
    CHECK(r.total_cost / 10 == doctest::Approx(25.27181555).epsilon(1e-9));
    double q = 0.0;
    CHECK(r.total_cost == doctest::Approx(quadratic_oracle(direct, 3.25, 100.0, &q)).epsilon(1e-8));
  }
  SUBCASE("balance and monotone cost in demand") {
    const auto direct = build_supply_curve_direct(s);
    double prev = -1.0;
    for (double d = 0.0; d <= 200.0; d += 7.5) {
      const auto r = clear_market({gens, d, direct, DispatchMode::Direct});
      CHECK(r.cleared_der + r.cleared_generator[0] == doctest::Approx(d).epsilon(1e-12));
      CHECK(r.total_cost >= prev);
      prev = r.total_cost;
    }
  }
  SUBCASE("ties split pro rata") {
    GeneratorSpec a = linear_gen(3.0), b = linear_gen(3.0);
    a.qmax = 30.0;
    b.qmax = 10.0;
    const auto r = clear_market({{a, b}, 20.0, std::nullopt, DispatchMode::NoDer});
    CHECK(r.tie_split);
    CHECK(r.cleared_generator[0] == doctest::Approx(15.0));
    CHECK(r.cleared_generator[1] == doctest::Approx(5.0));
    CHECK(r.clearing_price == doctest::Approx(3.0));
  }
  SUBCASE("merit order with segments and must-run") {
    GeneratorSpec a;
    a.qmin = 5.0;
    a.segments = {{10.0, 2.0}, {40.0, 5.0}};
    a.qmax = 40.0;
    const GeneratorSpec b = linear_gen(3.0);
    GeneratorSpec b_cap = b;
    b_cap.qmax = 15.0;
    const auto r = clear_market({{a, b_cap}, 30.0, std::nullopt, DispatchMode::NoDer});
    CHECK(r.cleared_generator[0] == doctest::Approx(15.0));
    CHECK(r.cleared_generator[1] == doctest::Approx(15.0));
    CHECK(r.clearing_price == doctest::Approx(5.0));
    CHECK(r.total_cost == doctest::Approx(20.0 + 25.0 + 45.0));
    const auto low = clear_market({{a, b}, 6.0, std::nullopt, DispatchMode::NoDer});
    CHECK(low.cleared_generator[0] == doctest::Approx(6.0));
    CHECK(low.clearing_price == doctest::Approx(2.0));
    try {
      clear_market({{a, b}, 3.0, std::nullopt, DispatchMode::NoDer});
      FAIL("expected InfeasibleDispatch");
    } catch (const InfeasibleDispatch& e) {
      CHECK(e.shortfall() == doctest::Approx(-2.0));
    }
  }
  SUBCASE("infeasible") {
    GeneratorSpec g = linear_gen(3.0);
    g.qmax = 10.0;
    try {
      clear_market({{g}, 20.0, std::nullopt, DispatchMode::NoDer});
      FAIL("expected InfeasibleDispatch");
    } catch (const InfeasibleDispatch& e) {
      CHECK(e.shortfall() == doctest::Approx(10.0));
    }
    CHECK_THROWS_AS(clear_market({{g}, 5.0, std::nullopt, DispatchMode::Direct}), ValidationError);
  }
}

TEST_CASE("price of aggregation") {
  const std::vector<GeneratorSpec> gens{linear_gen(3.25)};
  SUBCASE("fig 5 point") {
    const auto r = poag(fig5(), gens, 100.0);
    CHECK(r.poag == doctest::Approx(1.1430088).epsilon(1e-6));
    CHECK(r.poag == doctest::Approx(r.cost_aggregated / r.cost_direct));
    CHECK(r.cost_noder >= r.cost_aggregated);
    CHECK(r.cost_aggregated >= r.cost_direct);
    CHECK(std::abs(r.poag - 1.15) <= 0.02);
  }
  SUBCASE("decreasing in sigma") {
    double prev = 2.0;
    for (double sigma : {3.3, 3.8, 4.4, 5.0, 5.7}) {
      const double v = poag(fig5(sigma), gens, 100.0).poag;
      CHECK(v < prev);
      CHECK(v >= 1.0 - 1e-9);
      prev = v;
    }
  }
  SUBCASE("DER priced above the generator") {
    GameScenario s = fig5(10.0 / kSqrt3);  // support starts at 0: p(0) = gamma
    s.utility = UtilitySpec::linear(3.5);
    s.lambda_da = 5.0;
    const auto r = poag(s, gens, 100.0);
    CHECK(r.aggregated.cleared_der == 0.0);
    CHECK(r.direct.cleared_der == 0.0);
    CHECK(r.poag == doctest::Approx(1.0));
    CurveOptions o;
    o.method = CurveMethod::Numeric;
    o.price_points = 33;
    GameScenario t = fig5();
    t.utility = UtilitySpec::linear(3.5);
    t.lambda_da = 5.0;
    const auto n = poag(t, gens, 100.0, o);
    CHECK(n.aggregated.cleared_der == 0.0);
    CHECK(n.direct.cleared_der == 0.0);
    CHECK(n.poag == doctest::Approx(1.0));
  }
}
