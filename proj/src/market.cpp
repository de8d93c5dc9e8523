#include "dersim/market.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "dersim/errors.hpp"
#include "dersim/numeric.hpp"

namespace dersim {

// ---------------------------------------------------------------------------
// Generators and curves

double GeneratorSpec::cost(double q) const {
  if (segments.empty()) {
    return kappa * q;
  }
  double acc = 0.0;
  double from = 0.0;
  for (const auto& seg : segments) {
    if (q <= from) break;
    const double to = std::min(q, seg.upto);
    acc += seg.marginal * (to - from);
    from = seg.upto;
  }
  if (q > from) {
    acc += segments.back().marginal * (q - from);
  }
  return acc;
}

void GeneratorSpec::validate() const {
  if (!(qmin >= 0.0) || !(qmax >= qmin)) {
    throw ValidationError("generator: need 0 <= qmin <= qmax");
  }
  if (segments.empty()) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
      throw ValidationError("generator: kappa must be finite and >= 0");
    }
    return;
  }
  double prev_upto = 0.0;
  double prev_marginal = 0.0;
  for (const auto& seg : segments) {
    if (!(seg.upto > prev_upto) || !(seg.marginal >= prev_marginal) || !std::isfinite(seg.marginal)) {
      throw ValidationError(
          "generator: cost segments need increasing 'upto' and nondecreasing finite marginals >= 0");
    }
    prev_upto = seg.upto;
    prev_marginal = seg.marginal;
  }
}

std::string_view to_string(SupplyCurveKind kind) {
  switch (kind) {
    case SupplyCurveKind::AggregatorAffine:
      return "aggregator_affine";
    case SupplyCurveKind::ProsumerAffine:
      return "prosumer_affine";
    case SupplyCurveKind::Tabulated:
      return "tabulated";
  }
  return "unknown";
}

std::string_view to_string(DispatchMode mode) {
  switch (mode) {
    case DispatchMode::Aggregated:
      return "agg";
    case DispatchMode::Direct:
      return "direct";
    case DispatchMode::NoDer:
      return "noder";
    case DispatchMode::Social:
      return "social";
  }
  return "unknown";
}

DispatchMode dispatch_mode_from_string(std::string_view name) {
  if (name == "agg") return DispatchMode::Aggregated;
  if (name == "direct") return DispatchMode::Direct;
  if (name == "noder") return DispatchMode::NoDer;
  if (name == "social") return DispatchMode::Social;
  throw ValidationError("unknown dispatch mode '" + std::string(name) + "'");
}

std::string_view to_string(CurveMethod method) {
  switch (method) {
    case CurveMethod::Auto:
      return "auto";
    case CurveMethod::ClosedForm:
      return "closed-form";
    case CurveMethod::Numeric:
      return "numeric";
  }
  return "unknown";
}

CurveMethod curve_method_from_string(std::string_view name) {
  if (name == "auto") return CurveMethod::Auto;
  if (name == "closed-form") return CurveMethod::ClosedForm;
  if (name == "numeric") return CurveMethod::Numeric;
  throw ValidationError("unknown curve method '" + std::string(name) + "'");
}

SupplyCurve SupplyCurve::affine(SupplyCurveKind kind, double price_at_zero, double slope, double cap) {
  SupplyCurve c;
  c.kind = kind;
  c.quantity_cap = cap;
  c.breakpoints = {{0.0, price_at_zero}, {cap, price_at_zero + slope * cap}};
  c.validate();
  return c;
}

SupplyCurve SupplyCurve::tabulated(std::vector<std::pair<double, double>> points, double cap) {
  SupplyCurve c;
  c.kind = SupplyCurveKind::Tabulated;
  c.quantity_cap = cap;
  c.breakpoints = std::move(points);
  c.validate();
  return c;
}

void SupplyCurve::validate() const {
  if (breakpoints.empty() || !(quantity_cap >= 0.0)) {
    throw ValidationError("supply curve: needs breakpoints and a cap >= 0");
  }
  if (breakpoints.front().first != 0.0) {
    throw ValidationError("supply curve: first breakpoint must be at quantity 0");
  }
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    if (breakpoints[k].first < breakpoints[k - 1].first ||
        breakpoints[k].second < breakpoints[k - 1].second) {
      throw ValidationError("supply curve: breakpoints must be nondecreasing in quantity and price");
    }
  }
  if (breakpoints.back().first > quantity_cap * (1.0 + 1e-12) + 1e-12) {
    throw ValidationError("supply curve: breakpoints exceed the quantity cap");
  }
}

double SupplyCurve::price_at(double q) const {
  const auto& b = breakpoints;
  if (q <= b.front().first) return b.front().second;
  for (std::size_t k = 1; k < b.size(); ++k) {
    if (q <= b[k].first) {
      const auto& [q0, p0] = b[k - 1];
      const auto& [q1, p1] = b[k];
      return q1 > q0 ? p0 + (p1 - p0) * (q - q0) / (q1 - q0) : p1;
    }
  }
  return b.back().second;
}

double SupplyCurve::quantity_at(double price) const {
  const auto& b = breakpoints;
  if (price < b.front().second) return 0.0;
  double q = b.front().first;
  for (std::size_t k = 1; k < b.size(); ++k) {
    const auto& [q0, p0] = b[k - 1];
    const auto& [q1, p1] = b[k];
    if (p1 <= price) {
      q = q1;
      continue;
    }
    q = q0 + (q1 - q0) * (price - p0) / (p1 - p0);
    break;
  }
  return q;
}

double SupplyCurve::integral(double q) const {
  const auto& b = breakpoints;
  double acc = 0.0;
  for (std::size_t k = 1; k < b.size() && b[k - 1].first < q; ++k) {
    const double hi = std::min(q, b[k].first);
    const double lo = b[k - 1].first;
    if (hi > lo) {
      acc += 0.5 * (price_at(lo) + price_at(hi)) * (hi - lo);
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Clearing

namespace {

// Resource offer used by the merit-order sweep: inverse supply from 0 with a
// must-run floor.
struct Offer {
  std::vector<std::pair<double, double>> pts;
  double must_run = 0.0;

  double q_hi(double price) const {
    double q = 0.0;
    if (price >= pts.front().second) {
      q = pts.front().first;
      for (std::size_t k = 1; k < pts.size(); ++k) {
        const auto& [q0, p0] = pts[k - 1];
        const auto& [q1, p1] = pts[k];
        if (p1 <= price) {
          q = q1;
          continue;
        }
        q = q0 + (q1 - q0) * (price - p0) / (p1 - p0);
        break;
      }
    }
    return std::max(q, must_run);
  }

  double q_lo(double price) const {
    double q = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      const auto& [q0, p0] = pts[k - 1];
      const auto& [q1, p1] = pts[k];
      if (p1 < price) {
        q = q1;
        continue;
      }
      if (p0 < price) {
        q = q0 + (q1 - q0) * (price - p0) / (p1 - p0);
      }
      break;
    }
    return std::max(q, must_run);
  }

  double capacity() const { return std::max(pts.back().first, must_run); }
};

Offer generator_offer(const GeneratorSpec& g, double demand) {
  g.validate();
  const double qmax = std::isfinite(g.qmax) ? g.qmax : std::max(demand, g.qmin);
  Offer o;
  o.must_run = g.qmin;
  if (g.segments.empty()) {
    o.pts = {{0.0, g.kappa}, {qmax, g.kappa}};
    return o;
  }
  double from = 0.0;
  for (const auto& seg : g.segments) {
    if (from >= qmax) break;
    const double to = std::min(seg.upto, qmax);
    o.pts.emplace_back(from, seg.marginal);
    o.pts.emplace_back(to, seg.marginal);
    from = to;
  }
  if (from < qmax) {
    o.pts.emplace_back(from, g.segments.back().marginal);
    o.pts.emplace_back(qmax, g.segments.back().marginal);
  }
  return o;
}

Offer der_offer(const SupplyCurve& curve) {
  curve.validate();
  Offer o;
  o.pts = curve.breakpoints;
  if (o.pts.size() == 1) {
    o.pts.push_back(o.pts.front());
  }
  return o;
}

}  // namespace

DispatchOutcome clear_market(const DispatchProblem& problem) {
  const double demand = problem.demand;
  if (!(demand >= 0.0) || !std::isfinite(demand)) {
    throw ValidationError("dispatch: demand must be finite and >= 0");
  }
  const bool with_der = problem.mode != DispatchMode::NoDer;
  if (with_der && !problem.der_supply) {
    throw ValidationError("dispatch: DER supply curve required in this mode");
  }

  std::vector<Offer> offers;
  for (const auto& g : problem.generators) {
    offers.push_back(generator_offer(g, demand));
  }
  if (with_der) {
    offers.push_back(der_offer(*problem.der_supply));
  }
  if (offers.empty()) {
    throw InfeasibleDispatch("dispatch: no resources", demand);
  }

  double floor = 0.0;
  double cap = 0.0;
  std::vector<double> prices;
  for (const auto& o : offers) {
    floor += o.must_run;
    cap += o.capacity();
    for (const auto& pt : o.pts) prices.push_back(pt.second);
  }
  const double slack = 1e-12 * std::max(1.0, demand);
  if (cap < demand - slack) {
    std::ostringstream os;
    os << "dispatch infeasible: capacity " << cap << " short of demand " << demand << " by "
       << demand - cap;
    throw InfeasibleDispatch(os.str(), demand - cap);
  }
  if (floor > demand + slack) {
    std::ostringstream os;
    os << "dispatch infeasible: must-run output " << floor << " exceeds demand " << demand;
    throw InfeasibleDispatch(os.str(), demand - floor);
  }
  std::sort(prices.begin(), prices.end());
  prices.erase(std::unique(prices.begin(), prices.end()), prices.end());

  auto total = [&](auto&& f, double p) {
    double s = 0.0;
    for (const auto& o : offers) s += f(o, p);
    return s;
  };
  auto hi = [](const Offer& o, double p) { return o.q_hi(p); };
  auto lo = [](const Offer& o, double p) { return o.q_lo(p); };

  std::size_t k = 0;
  while (k < prices.size() && total(hi, prices[k]) < demand - slack) ++k;
  if (k == prices.size()) k = prices.size() - 1;

  std::vector<double> q(offers.size());
  DispatchOutcome out;
  out.mode = problem.mode;
  const double s_lo = total(lo, prices[k]);
  if (s_lo <= demand || k == 0) {
    // Demand is met on the step at prices[k]: split it pro rata.
    out.clearing_price = prices[k];
    double gap_total = 0.0;
    int with_gap = 0;
    for (std::size_t j = 0; j < offers.size(); ++j) {
      const double gap = offers[j].q_hi(prices[k]) - offers[j].q_lo(prices[k]);
      gap_total += gap;
      with_gap += gap > 0.0;
    }
    const double share = gap_total > 0.0 ? std::clamp((demand - s_lo) / gap_total, 0.0, 1.0) : 0.0;
    for (std::size_t j = 0; j < offers.size(); ++j) {
      const double base = offers[j].q_lo(prices[k]);
      q[j] = base + share * (offers[j].q_hi(prices[k]) - base);
    }
    out.tie_split = with_gap > 1;
  } else {
    // Every offer is linear on the open price interval (prices[k-1], prices[k]).
    const double p0 = prices[k - 1];
    const double p1 = prices[k];
    const double s0 = total(hi, p0);
    const double t = (demand - s0) / (s_lo - s0);
    out.clearing_price = p0 + t * (p1 - p0);
    for (std::size_t j = 0; j < offers.size(); ++j) {
      const double a = offers[j].q_hi(p0);
      q[j] = a + t * (offers[j].q_lo(p1) - a);
    }
  }

  // Absorb rounding in the balance on a resource with room to move.
  double residual = demand;
  for (double v : q) residual -= v;
  if (residual != 0.0) {
    for (std::size_t j = offers.size(); j-- > 0;) {
      const double nv = std::clamp(q[j] + residual, offers[j].must_run, offers[j].capacity());
      residual -= nv - q[j];
      q[j] = nv;
      if (residual == 0.0) break;
    }
  }

  out.cleared_generator.assign(q.begin(), q.begin() + static_cast<long>(problem.generators.size()));
  for (std::size_t j = 0; j < problem.generators.size(); ++j) {
    out.generator_cost += problem.generators[j].cost(q[j]);
  }
  if (with_der) {
    out.cleared_der = q.back();
    out.der_cost = problem.der_supply->integral(out.cleared_der);
  }
  out.total_cost = out.generator_cost + out.der_cost;
  return out;
}

// ---------------------------------------------------------------------------
// Curve construction

bool closed_form_applies(const GameScenario& s) {
  return s.capacity.kind == CapacityKind::DependentUniform && s.is_linear();
}

closedform::UniformLinearParams uniform_linear_params(const GameScenario& s) {
  if (!closed_form_applies(s)) {
    throw ValidationError("closed form needs dependent_uniform capacities and linear utility");
  }
  return {s.utility.gamma, s.capacity.mu, s.capacity.sigma, s.lambda_da, s.lambda_rt, s.n_prosumers};
}

namespace {

bool use_closed_form(const GameScenario& s, CurveMethod method) {
  if (method == CurveMethod::ClosedForm && !closed_form_applies(s)) {
    throw ValidationError("closed-form curve requested for a scenario without one");
  }
  return method == CurveMethod::ClosedForm || (method == CurveMethod::Auto && closed_form_applies(s));
}

std::vector<double> price_grid(const GameScenario& s, const CurveOptions& o) {
  if (o.price_points < 2) {
    throw ValidationError("supply curve: price_points must be >= 2");
  }
  const RhoBounds b = rho_bounds(s, o.solver);
  const double lo = std::isnan(o.price_lo) ? b.rho_min : o.price_lo;
  const double hi = std::isnan(o.price_hi) ? b.rho_min + 3.0 * s.lambda_rt : o.price_hi;
  if (!(hi > lo)) {
    throw ValidationError("supply curve: price grid needs price_hi > price_lo");
  }
  std::vector<double> grid(static_cast<std::size_t>(o.price_points));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid[k] = k + 1 == grid.size() ? hi : lo + (hi - lo) * static_cast<double>(k) / (grid.size() - 1);
  }
  return grid;
}

template <class QuantityAt>
SupplyCurve tabulate(const GameScenario& s, const CurveOptions& o, QuantityAt&& quantity_at) {
  const auto grid = price_grid(s, o);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(grid.size() + 1);
  pts.emplace_back(0.0, grid.front());
  std::vector<double> failed;
  double last = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    try {
      // Offers are nondecreasing in price; the running max removes solver noise.
      last = std::max(last, std::min(quantity_at(grid[k]), s.n_prosumers * s.cbar()));
      pts.emplace_back(last, grid[k]);
    } catch (const SolverError&) {
      failed.push_back(grid[k]);
    }
  }
  if (!failed.empty()) {
    std::ostringstream os;
    os << "supply curve: solver failed at " << failed.size() << " price(s):";
    for (double p : failed) os << ' ' << p;
    throw SolverError(os.str(), failed);
  }
  return SupplyCurve::tabulated(std::move(pts), s.n_prosumers * s.cbar());
}

}  // namespace

SupplyCurve build_supply_curve_aggregated(const GameScenario& s, const CurveOptions& o) {
  s.validate();
  if (use_closed_form(s, o.method)) {
    const auto p = uniform_linear_params(s);
    const double slope = s.lambda_rt / (s.n_prosumers * p.half_width());
    return SupplyCurve::affine(SupplyCurveKind::AggregatorAffine,
                               closedform::inverse_supply_aggregator(p, 0.0), slope,
                               s.n_prosumers * s.cbar());
  }
  // x*(rho) does not depend on the wholesale price: tabulate it once and
  // maximise (p_A - rho) x*(rho) on its piecewise-linear interpolant.
  const FollowerModel model(s, o.solver.draws, o.solver.seed);
  const RhoBounds b = model.bounds();
  const double lo = std::max(0.0, b.rho_min);
  const double hi = std::max(lo, std::min(b.rho_max, price_grid(s, o).back()));
  const int m = std::max(3, o.solver.rho_grid_points);
  std::vector<double> rho(static_cast<std::size_t>(m));
  std::vector<double> x(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k) {
    rho[k] = k + 1 == rho.size() ? hi : lo + (hi - lo) * static_cast<double>(k) / (m - 1);
    x[k] = model.response(rho[k], o.solver.tol_x, o.solver.max_iterations);
  }
  auto offer = [&](double r) {
    if (r <= rho.front()) return x.front();
    if (r >= rho.back()) return x.back();
    const auto it = std::upper_bound(rho.begin(), rho.end(), r);
    const std::size_t k = static_cast<std::size_t>(it - rho.begin());
    const double t = (r - rho[k - 1]) / (rho[k] - rho[k - 1]);
    return x[k - 1] + t * (x[k] - x[k - 1]);
  };
  return tabulate(s, o, [&](double p_a) {
    if (p_a <= lo) return s.n_prosumers * (p_a < b.rho_min ? 0.0 : offer(lo));
    const double top = std::min(p_a, hi);
    std::size_t best = 0;
    double best_value = -1.0;
    for (std::size_t k = 0; k < rho.size() && rho[k] <= top; ++k) {
      const double v = (p_a - rho[k]) * x[k];
      if (v > best_value) {
        best_value = v;
        best = k;
      }
    }
    const double a = rho[best == 0 ? 0 : best - 1];
    const double c = std::min(top, rho[std::min(best + 1, rho.size() - 1)]);
    const auto gs = golden_section_maximize([&](double r) { return (p_a - r) * offer(r); }, a, std::max(a, c),
                                            o.solver.tol_rho);
    const double r_star = gs.value >= best_value ? gs.x : rho[best];
    return s.n_prosumers * offer(r_star);
  });
}

SupplyCurve build_supply_curve_direct(const GameScenario& s, const CurveOptions& o) {
  s.validate();
  if (use_closed_form(s, o.method)) {
    const auto p = uniform_linear_params(s);
    const double slope = s.lambda_rt / (2.0 * p.half_width() * s.n_prosumers);
    return SupplyCurve::affine(SupplyCurveKind::ProsumerAffine,
                               closedform::inverse_supply_prosumer(p, 0.0), slope,
                               s.n_prosumers * s.cbar());
  }
  // Each prosumer bears its own shortfall: the single-prosumer follower
  // problem with the same marginal law.
  GameScenario single = s;
  single.n_prosumers = 1;
  if (single.capacity.kind == CapacityKind::IidUniform) {
    single.capacity.kind = CapacityKind::DependentUniform;
  }
  const FollowerModel model(single, o.solver.draws, o.solver.seed);
  return tabulate(s, o, [&](double p) {
    return s.n_prosumers * model.response(p, o.solver.tol_x, o.solver.max_iterations);
  });
}

PoAgReport poag(const GameScenario& s, const std::vector<GeneratorSpec>& generators, double demand,
                const CurveOptions& o) {
  CurveOptions curve_options = o;
  if (std::isnan(curve_options.price_hi)) {
    double top = rho_bounds(s, o.solver).rho_min + 3.0 * s.lambda_rt;
    for (const auto& g : generators) {
      top = std::max(top, g.segments.empty() ? g.kappa : g.segments.back().marginal);
    }
    curve_options.price_hi = top + s.lambda_rt;
  }
  auto agg_curve = std::async(std::launch::async, [&] { return build_supply_curve_aggregated(s, curve_options); });
  const SupplyCurve direct_curve = build_supply_curve_direct(s, curve_options);

  PoAgReport r;
  r.scenario = s;
  r.demand = demand;
  r.seed = o.solver.seed;
  r.draws = o.solver.draws;
  r.aggregated = clear_market({generators, demand, agg_curve.get(), DispatchMode::Aggregated});
  r.direct = clear_market({generators, demand, direct_curve, DispatchMode::Direct});
  r.noder = clear_market({generators, demand, std::nullopt, DispatchMode::NoDer});
  r.cost_aggregated = r.aggregated.total_cost;
  r.cost_direct = r.direct.total_cost;
  r.cost_noder = r.noder.total_cost;
  r.poag = r.cost_direct != 0.0 ? r.cost_aggregated / r.cost_direct : 1.0;
  return r;
}

}  // namespace dersim
