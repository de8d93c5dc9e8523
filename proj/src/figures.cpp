#include "dersim/figures.hpp"

#include <algorithm>
#include <cmath>

#include "dersim/closedform.hpp"
#include "dersim/errors.hpp"
#include "dersim/parallel.hpp"

namespace dersim {

namespace {

using Row = std::vector<std::string>;

std::string status_text(const std::exception& e) {
  std::string s = std::string("error: ") + e.what();
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

Row number_row(const std::vector<double>& values, std::string status = "ok") {
  Row r;
  for (double v : values) r.push_back(format_number(v));
  r.push_back(std::move(status));
  return r;
}

Row failed_row(double key, std::size_t n_values, const std::exception& e) {
  Row r(n_values + 1);
  r[0] = format_number(key);
  r.back() = status_text(e);
  return r;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[k] = n == 1 ? a : (k + 1 == n ? b : a + (b - a) * k / (n - 1));
  return v;
}

CsvTable table(const CurveOptions& o, std::vector<std::string> columns, std::vector<Row> rows) {
  CsvTable t;
  t.meta = run_metadata(o.solver);
  t.meta.emplace_back("curve", std::string(to_string(o.method)));
  t.columns = std::move(columns);
  for (auto& r : rows) t.add_row(std::move(r));
  return t;
}

closedform::UniformLinearParams params_of(const GameScenario& s) { return uniform_linear_params(s); }

double band_lo(const FigureParams& p) {
  return closedform::sigma_band({p.gamma, p.mu, 1.0, p.lambda_da, p.lambda_rt, p.n_prosumers}).first;
}
double band_hi(const FigureParams& p) {
  return closedform::sigma_band({p.gamma, p.mu, 1.0, p.lambda_da, p.lambda_rt, p.n_prosumers}).second;
}

std::vector<GeneratorSpec> figure_generators(const FigureParams& p) {
  GeneratorSpec g;
  g.kappa = p.kappa;
  return {g};
}

double closed_form_poag(const GameScenario& s, const FigureParams& p) {
  try {
    return closedform::uniform_costs(params_of(s), p.kappa, p.demand_per_prosumer).poag;
  } catch (const AdmissibilityError&) {
    return std::nan("");
  }
}

std::vector<FigureFile> fig3(const CurveOptions& o, const FigureParams& p) {
  const std::vector<double> sigmas = {3.3, 4.0, 5.0, 5.7};
  const auto rhos = linspace(p.gamma - 0.5, p.gamma + p.lambda_rt + 0.5, 2 * p.points - 1);

  auto offers = parallel_map(sigmas.size(), [&](std::size_t k) {
    std::vector<Row> rows;
    const GameScenario s = figure_scenario(p, p.mu, sigmas[k]);
    const FollowerModel model(s, o.solver.draws, o.solver.seed);
    const auto x_cf = closedform::uniform_equilibrium(params_of(s)).x_star_fn;
    for (double rho : rhos) {
      const double closed = std::clamp(rho < p.gamma ? 0.0 : x_cf(rho), 0.0, s.cbar());
      try {
        rows.push_back(number_row({sigmas[k], rho, model.response(rho, o.solver.tol_x), closed}));
      } catch (const Error& e) {
        rows.push_back(failed_row(sigmas[k], 3, e));
      }
    }
    return rows;
  });
  std::vector<Row> offer_rows;
  for (auto& block : offers) offer_rows.insert(offer_rows.end(), block.begin(), block.end());

  auto stars = parallel_map(sigmas.size(), [&](std::size_t k) {
    const GameScenario s = figure_scenario(p, p.mu, sigmas[k]);
    try {
      const auto eq = stackelberg_solve(s, o.solver);
      const auto cf = closedform::uniform_equilibrium(params_of(s));
      return number_row({sigmas[k], eq.rho_star, eq.x_star, eq.leader_profit, cf.rho_star, cf.x_star()});
    } catch (const Error& e) {
      return failed_row(sigmas[k], 5, e);
    }
  });

  return {{"fig3_offers.csv", table(o, {"sigma", "rho", "x_star", "x_star_closed_form", "status"}, offer_rows)},
          {"fig3_rho_star.csv",
           table(o, {"sigma", "rho_star", "x_star", "leader_profit", "rho_star_closed_form", "x_star_closed_form", "status"},
                 stars)}};
}

std::vector<FigureFile> fig4(const CurveOptions& o, const FigureParams& p) {
  const double sigma = 3.3;
  const GameScenario s = figure_scenario(p, p.mu, sigma);
  const SupplyCurve agg = build_supply_curve_aggregated(s, o);
  const SupplyCurve direct = build_supply_curve_direct(s, o);
  std::vector<Row> rows;
  for (double q : linspace(0.0, s.cbar(), p.points)) {
    const double Q = q * p.n_prosumers;
    rows.push_back(number_row({q, agg.price_at(Q), direct.price_at(Q)}));
  }

  const double q_fixed = 0.4 * p.mu;
  const auto sigmas = linspace(band_lo(p), band_hi(p), p.points);
  auto by_sigma = parallel_map(sigmas.size(), [&](std::size_t k) {
    try {
      const GameScenario sk = figure_scenario(p, p.mu, sigmas[k]);
      const double Q = q_fixed * p.n_prosumers;
      return number_row({sigmas[k], q_fixed, build_supply_curve_aggregated(sk, o).price_at(Q),
                         build_supply_curve_direct(sk, o).price_at(Q)});
    } catch (const Error& e) {
      return failed_row(sigmas[k], 3, e);
    }
  });

  return {{"fig4_supply.csv", table(o, {"q_per_prosumer", "price_aggregated", "price_direct", "status"}, rows)},
          {"fig4_sigma.csv",
           table(o, {"sigma", "q_per_prosumer", "price_aggregated", "price_direct", "status"}, by_sigma)}};
}

Row cost_row(const CurveOptions& o, const FigureParams& p, double key, double mu, double sigma) {
  try {
    const GameScenario s = figure_scenario(p, mu, sigma);
    const auto r = poag(s, figure_generators(p), p.demand_per_prosumer * p.n_prosumers, o);
    const double n = p.n_prosumers;
    return number_row({key, r.cost_noder / n, r.cost_aggregated / n, r.cost_direct / n,
                       r.aggregated.cleared_der / n, r.direct.cleared_der / n, r.aggregated.clearing_price,
                       r.direct.clearing_price, r.poag, closed_form_poag(s, p)});
  } catch (const Error& e) {
    return failed_row(key, 9, e);
  }
}

const std::vector<std::string> kCostColumns = {
    "cost_noder", "cost_aggregated", "cost_direct", "cleared_der_aggregated", "cleared_der_direct",
    "price_aggregated", "price_direct", "poag", "poag_closed_form", "status"};

std::vector<std::string> cost_columns(std::string key) {
  std::vector<std::string> c{std::move(key)};
  c.insert(c.end(), kCostColumns.begin(), kCostColumns.end());
  return c;
}

std::vector<FigureFile> fig5(const CurveOptions& o, const FigureParams& p) {
  const auto sigmas = linspace(band_lo(p), band_hi(p), p.points);
  auto rows = parallel_map(sigmas.size(), [&](std::size_t k) { return cost_row(o, p, sigmas[k], p.mu, sigmas[k]); });
  return {{"fig5_costs.csv", table(o, cost_columns("sigma"), rows)}};
}

std::vector<FigureFile> fig6_left(const CurveOptions& o, const FigureParams& p) {
  const auto sigmas = linspace(band_lo(p), band_hi(p), p.points);
  auto rows = parallel_map(sigmas.size(), [&](std::size_t k) { return cost_row(o, p, sigmas[k], p.mu, sigmas[k]); });
  return {{"fig6_left.csv", table(o, cost_columns("sigma"), rows)}};
}

std::vector<FigureFile> fig6_right(const CurveOptions& o, const FigureParams& p) {
  const auto mus = linspace(6.0, 10.0, p.points);
  auto rows = parallel_map(mus.size(), [&](std::size_t k) { return cost_row(o, p, mus[k], mus[k], 3.3); });
  return {{"fig6_right.csv", table(o, cost_columns("mu"), rows)}};
}

}  // namespace

const std::vector<std::string_view>& figure_names() {
  static const std::vector<std::string_view> names = {"fig3", "fig4", "fig5", "fig6-left", "fig6-right"};
  return names;
}

GameScenario figure_scenario(const FigureParams& p, double mu, double sigma) {
  GameScenario s;
  s.n_prosumers = p.n_prosumers;
  s.d0 = p.d0;
  s.capacity = CapacityModel::dependent_uniform(mu, sigma);
  s.utility = UtilitySpec::linear(p.gamma);
  s.lambda_da = p.lambda_da;
  s.lambda_rt = p.lambda_rt;
  s.validate();
  return s;
}

std::vector<FigureFile> make_figure(std::string_view name, const CurveOptions& options, const FigureParams& params) {
  if (name == "fig3") return fig3(options, params);
  if (name == "fig4") return fig4(options, params);
  if (name == "fig5") return fig5(options, params);
  if (name == "fig6-left") return fig6_left(options, params);
  if (name == "fig6-right") return fig6_right(options, params);
  throw ValidationError("unknown figure '" + std::string(name) + "'");
}

}  // namespace dersim
