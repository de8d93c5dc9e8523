#include "dersim/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "dersim/closedform.hpp"
#include "dersim/csv.hpp"
#include "dersim/errors.hpp"
#include "dersim/figures.hpp"
#include "dersim/parallel.hpp"
#include "dersim/penalty.hpp"

namespace dersim::cli {

namespace {

constexpr std::size_t kValidateAxiomInstances = 2000;

std::string flag(bool b) { return b ? "1" : "0"; }

std::string cell_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

struct Loaded {
  ScenarioFile file;
  SolverOptions solver;
  CurveOptions curve;
};

Loaded load(const std::string& path, const CommonOptions& common) {
  Loaded l{load_scenario_file(path), {}, {}};
  l.solver = resolve_solver(l.file.solver, common);
  l.file.solver = l.solver;
  l.file.validate();
  l.curve.method = common.curve;
  l.curve.solver = l.solver;
  return l;
}

/// CSV goes to --out when given, otherwise to `out`.
void emit(const CsvTable& t, const CommonOptions& common, std::ostream& out) {
  if (common.out.empty()) {
    write_csv(out, t);
  } else {
    write_csv_file(common.out, t);
    out << "wrote " << common.out << '\n';
  }
}

CsvTable new_table(const SolverOptions& solver, std::vector<std::string> columns) {
  CsvTable t;
  t.meta = run_metadata(solver);
  t.columns = std::move(columns);
  return t;
}

void require_market(const ScenarioFile& f) {
  if (f.generators.empty()) throw ValidationError("scenario file has no generators");
}

}  // namespace

SolverOptions resolve_solver(const SolverOptions& from_file, const CommonOptions& common) {
  SolverOptions s = from_file;
  if (common.seed) {
    s.seed = *common.seed;
  } else if (const char* env = std::getenv(kSeedEnv); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') {
      throw ValidationError(std::string(kSeedEnv) + " must be a nonnegative integer");
    }
    s.seed = v;
  }
  if (common.draws) s.draws = *common.draws;
  return s;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const AdmissibilityError*>(&e)) return kExitAdmissibility;
  if (dynamic_cast<const SolverError*>(&e)) return kExitSolver;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const UnsupportedOperation*>(&e) ||
      dynamic_cast<const InfeasibleDispatch*>(&e)) {
    return kExitInvalid;
  }
  return kExitFailure;
}

int cmd_validate(const std::string& path, const CommonOptions& common, std::ostream& out) {
  int code = kExitOk;
  Loaded l;
  try {
    l = load(path, common);
    out << "scenario: ok (" << l.file.scenario.n_prosumers << " prosumers, "
        << to_string(l.file.scenario.capacity.kind) << ")\n";
  } catch (const Error& e) {
    out << "scenario: invalid: " << e.what() << '\n';
    return exit_code_for(e);
  }

  const auto report = check_penalty_axioms(kValidateAxiomInstances, l.solver.seed);
  out << "penalty axioms: " << report.instances << " instances, " << report.violations << " violations\n";
  for (const auto& m : report.messages) out << "  " << m << '\n';
  if (!report.ok()) code = kExitInvalid;

  if (l.file.closed_form) {
    try {
      if (!closed_form_applies(l.file.scenario)) {
        throw AdmissibilityError("closed form needs dependent_uniform capacities and linear utility");
      }
      const auto p = uniform_linear_params(l.file.scenario);
      closedform::check_admissible(p);
      const auto [lo, hi] = closedform::sigma_band(p);
      out << "closed form: admissible (sigma band [" << format_number(lo) << ", " << format_number(hi) << "])\n";
    } catch (const AdmissibilityError& e) {
      out << "closed form: not admissible: " << e.what() << '\n';
      if (code == kExitOk) code = kExitAdmissibility;
    }
  }
  return code;
}

int cmd_equilibrium(const std::string& path, const CommonOptions& common, bool mean_field,
                    std::optional<double> rho, std::ostream& out) {
  const Loaded l = load(path, common);
  const GameScenario& s = l.file.scenario;
  if (rho) {
    if (mean_field) {
      const auto m = meanfield_solve(s, *rho, l.solver.tol_x, MeanFieldMethod::Bisection, l.solver);
      CsvTable t = new_table(l.solver, {"rho", "beta", "x_star", "residual_offer", "residual_beta"});
      t.add_numbers({*rho, m.beta, m.x_star, m.residual_offer, m.residual_beta});
      emit(t, common, out);
    } else {
      const FollowerModel model(s, l.solver.draws, l.solver.seed);
      const double x = model.response(*rho, l.solver.tol_x, l.solver.max_iterations);
      CsvTable t = new_table(l.solver, {"rho", "x_star", "aggregate_x"});
      t.add_numbers({*rho, x, x * s.n_prosumers});
      emit(t, common, out);
    }
    return kExitOk;
  }

  const auto r = stackelberg_solve(s, l.solver, mean_field ? FollowerRegime::MeanField : FollowerRegime::FiniteN);
  CsvTable t = new_table(l.solver, {"rho_star", "x_star", "aggregate_x", "leader_profit", "beta", "concavity_ok",
                                    "multiple_maxima", "follower_residual"});
  for (const auto& w : r.diagnostics.warnings) t.meta.emplace_back("warning", w);
  const double beta = r.beta ? *r.beta : std::nan("");
  t.add_row({format_number(r.rho_star), format_number(r.x_star), format_number(r.aggregate_x),
             format_number(r.leader_profit), format_number(beta), flag(r.diagnostics.concavity_ok),
             flag(r.diagnostics.multiple_maxima), format_number(r.diagnostics.follower_residual)});
  emit(t, common, out);
  return kExitOk;
}

int cmd_supply_curve(const std::string& path, const CommonOptions& common, DispatchMode mode, std::ostream& out) {
  const Loaded l = load(path, common);
  SupplyCurve c;
  if (mode == DispatchMode::Aggregated) {
    c = build_supply_curve_aggregated(l.file.scenario, l.curve);
  } else if (mode == DispatchMode::Direct || mode == DispatchMode::Social) {
    c = build_supply_curve_direct(l.file.scenario, l.curve);
  } else {
    throw ValidationError("supply-curve: mode must be agg or direct");
  }
  CsvTable t = new_table(l.solver, {"quantity", "price"});
  t.meta.emplace_back("kind", std::string(to_string(c.kind)));
  t.meta.emplace_back("quantity_cap", format_number(c.quantity_cap));
  for (const auto& [q, p] : c.breakpoints) t.add_numbers({q, p});
  emit(t, common, out);
  return kExitOk;
}

int cmd_dispatch(const std::string& path, const CommonOptions& common, DispatchMode mode, std::ostream& out) {
  const Loaded l = load(path, common);
  require_market(l.file);
  DispatchProblem problem{l.file.generators, l.file.demand(), std::nullopt, mode};
  if (mode == DispatchMode::Aggregated) {
    problem.der_supply = build_supply_curve_aggregated(l.file.scenario, l.curve);
  } else if (mode != DispatchMode::NoDer) {
    problem.der_supply = build_supply_curve_direct(l.file.scenario, l.curve);
  }
  const auto r = clear_market(problem);
  std::vector<std::string> cols = {"mode", "demand", "clearing_price", "cleared_der"};
  for (std::size_t k = 0; k < r.cleared_generator.size(); ++k) cols.push_back("cleared_generator_" + std::to_string(k));
  for (const char* c : {"generator_cost", "der_cost", "total_cost", "tie_split"}) cols.emplace_back(c);
  CsvTable t = new_table(l.solver, cols);
  t.meta.emplace_back("tie_rule", r.tie_rule);
  std::vector<std::string> row = {std::string(to_string(r.mode)), format_number(problem.demand),
                                  format_number(r.clearing_price), format_number(r.cleared_der)};
  for (double q : r.cleared_generator) row.push_back(format_number(q));
  row.push_back(format_number(r.generator_cost));
  row.push_back(format_number(r.der_cost));
  row.push_back(format_number(r.total_cost));
  row.push_back(flag(r.tie_split));
  t.add_row(std::move(row));
  emit(t, common, out);
  return kExitOk;
}

int cmd_poag(const std::string& path, const CommonOptions& common, std::ostream& out) {
  const Loaded l = load(path, common);
  require_market(l.file);
  const auto r = poag(l.file.scenario, l.file.generators, l.file.demand(), l.curve);
  CsvTable t = new_table(l.solver, {"cost_aggregated", "cost_direct", "cost_noder", "poag", "cleared_der_aggregated",
                                    "cleared_der_direct", "price_aggregated", "price_direct", "price_noder"});
  t.meta.emplace_back("tie_rule", std::string(kTieRule));
  t.add_numbers({r.cost_aggregated, r.cost_direct, r.cost_noder, r.poag, r.aggregated.cleared_der,
                 r.direct.cleared_der, r.aggregated.clearing_price, r.direct.clearing_price,
                 r.noder.clearing_price});
  emit(t, common, out);
  return kExitOk;
}

int cmd_sweep(const std::string& path, const CommonOptions& common, std::ostream& out) {
  const Loaded l = load(path, common);
  if (!l.file.sweep) throw ValidationError("scenario file has no sweep section");
  const SweepSpec sw = *l.file.sweep;
  const bool market = !l.file.generators.empty() && l.file.demand() > 0.0;

  const std::vector<std::string> cols = {sw.parameter, "rho_star", "x_star", "X", "cost_aggregated", "cost_direct",
                                         "cost_noder", "poag", "cleared_der_agg", "cleared_der_direct",
                                         "concavity_ok", "multiple_maxima", "status"};
  std::vector<int> codes(static_cast<std::size_t>(sw.steps), kExitOk);
  auto rows = parallel_map(
      static_cast<std::size_t>(sw.steps),
      [&](std::size_t k) {
        const double v = sw.value(static_cast<int>(k));
        std::vector<std::string> row(cols.size());
        row[0] = format_number(v);
        try {
          const ScenarioFile f = l.file.with_parameter(sw.parameter, v);
          f.validate();
          const auto eq = stackelberg_solve(f.scenario, l.solver);
          row[1] = format_number(eq.rho_star);
          row[2] = format_number(eq.x_star);
          row[3] = format_number(eq.aggregate_x);
          if (market) {
            const auto r = poag(f.scenario, f.generators, f.demand(), l.curve);
            row[4] = format_number(r.cost_aggregated);
            row[5] = format_number(r.cost_direct);
            row[6] = format_number(r.cost_noder);
            row[7] = format_number(r.poag);
            row[8] = format_number(r.aggregated.cleared_der);
            row[9] = format_number(r.direct.cleared_der);
          }
          row[10] = flag(eq.diagnostics.concavity_ok);
          row[11] = flag(eq.diagnostics.multiple_maxima);
          row[12] = "ok";
        } catch (const Error& e) {
          codes[k] = exit_code_for(e);
          std::fill(row.begin() + 1, row.end(), std::string());
          row.back() = cell_text(std::string("error: ") + e.what());
        }
        return row;
      },
      common.jobs);

  CsvTable t = new_table(l.solver, cols);
  t.meta.emplace_back("curve", std::string(to_string(l.curve.method)));
  std::size_t failed = 0;
  for (auto& r : rows) {
    failed += r.back() != "ok";
    t.add_row(std::move(r));
  }
  emit(t, common, out);
  if (failed) {
    std::cerr << failed << " of " << sw.steps << " sweep points failed\n";
    return *std::max_element(codes.begin(), codes.end());
  }
  return kExitOk;
}

int cmd_figures(const std::string& name, const CommonOptions& common, std::ostream& out) {
  CurveOptions o;
  o.method = common.curve;
  o.solver = resolve_solver(SolverOptions{}, common);
  const auto files = make_figure(name, o);
  const std::filesystem::path dir = common.out.empty() ? "." : common.out;
  std::filesystem::create_directories(dir);
  std::size_t failed = 0;
  for (const auto& f : files) {
    write_csv_file((dir / f.filename).string(), f.table);
    for (const auto& row : f.table.rows) failed += !row.empty() && row.back() != "ok";
    out << "wrote " << (dir / f.filename).string() << '\n';
  }
  if (failed) {
    std::cerr << failed << " figure rows failed\n";
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace dersim::cli
