#include <CLI11.hpp>
#include <iostream>

#include "dersim/commands.hpp"
#include "dersim/errors.hpp"
#include "dersim/figures.hpp"

namespace {

using namespace dersim;
using namespace dersim::cli;

struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> draws;
  std::string out;
  std::string curve = "auto";
  unsigned jobs = 0;

  CommonOptions common() const {
    return {seed, draws, out, curve_method_from_string(curve), jobs};
  }
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "RNG seed (default: $DERSIM_SEED, then the scenario file)");
  cmd->add_option("--draws", f.draws, "Monte Carlo draws");
  cmd->add_option("--out", f.out, "Output file (directory for figures)");
  cmd->add_option("--curve", f.curve, "Supply curve method")
      ->check(CLI::IsMember({"auto", "closed-form", "numeric"}));
  cmd->add_option("--jobs", f.jobs, "Worker threads (0: all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prosumer-aggregator DER market simulator"};
  app.require_subcommand(1);

  Flags f;
  std::string file;
  std::string mode;
  std::string figure;
  bool mean_field = false;
  std::optional<double> rho;

  auto* validate = app.add_subcommand("validate", "Check a scenario file and the penalty rule properties");
  auto* equilibrium = app.add_subcommand("equilibrium", "Solve the Stackelberg game");
  auto* supply = app.add_subcommand("supply-curve", "Print a DER supply offer");
  auto* dispatch = app.add_subcommand("dispatch", "Clear the day-ahead market");
  auto* poag_cmd = app.add_subcommand("poag", "Price of aggregation");
  auto* sweep = app.add_subcommand("sweep", "Run the sweep section of a scenario file");
  auto* figures = app.add_subcommand("figures", "Write figure data as CSV");

  for (auto* cmd : {validate, equilibrium, supply, dispatch, poag_cmd, sweep}) {
    cmd->add_option("file", file, "Scenario JSON")->required()->check(CLI::ExistingFile);
    add_common(cmd, f);
  }
  add_common(figures, f);
  equilibrium->add_flag("--mean-field", mean_field, "Use the mean-field follower game");
  equilibrium->add_option("--rho", rho, "Solve only the follower game at this retail price");
  supply->add_option("--mode", mode, "agg or direct")->required()->check(CLI::IsMember({"agg", "direct"}));
  dispatch->add_option("--mode", mode, "agg, direct or noder")
      ->required()
      ->check(CLI::IsMember({"agg", "direct", "noder", "social"}));
  std::vector<std::string> names(figure_names().begin(), figure_names().end());
  figures->add_option("name", figure, "Figure")->required()->check(CLI::IsMember(names));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitFailure;
  }

  try {
    const CommonOptions c = f.common();
    if (validate->parsed()) return cmd_validate(file, c, std::cout);
    if (equilibrium->parsed()) return cmd_equilibrium(file, c, mean_field, rho, std::cout);
    if (supply->parsed()) return cmd_supply_curve(file, c, dispatch_mode_from_string(mode), std::cout);
    if (dispatch->parsed()) return cmd_dispatch(file, c, dispatch_mode_from_string(mode), std::cout);
    if (poag_cmd->parsed()) return cmd_poag(file, c, std::cout);
    if (sweep->parsed()) return cmd_sweep(file, c, std::cout);
    if (figures->parsed()) return cmd_figures(figure, c, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitFailure;
}
