#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>

#include "dersim/market.hpp"
#include "dersim/scenario_file.hpp"

namespace dersim::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInvalid = 2,
  kExitSolver = 3,
  kExitAdmissibility = 4,
};

/// Environment variable that overrides the default seed.
inline constexpr const char* kSeedEnv = "DERSIM_SEED";

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> draws;
  std::string out;  // file (directory for figures); empty writes to stdout
  CurveMethod curve = CurveMethod::Auto;
  unsigned jobs = 0;  // 0: hardware concurrency
};

/// Seed precedence: --seed, then DERSIM_SEED, then the file, then the default.
SolverOptions resolve_solver(const SolverOptions& from_file, const CommonOptions& common);

int exit_code_for(const std::exception& e);

int cmd_validate(const std::string& path, const CommonOptions& common, std::ostream& out);
int cmd_equilibrium(const std::string& path, const CommonOptions& common, bool mean_field,
                    std::optional<double> rho, std::ostream& out);
int cmd_supply_curve(const std::string& path, const CommonOptions& common, DispatchMode mode,
                     std::ostream& out);
int cmd_dispatch(const std::string& path, const CommonOptions& common, DispatchMode mode, std::ostream& out);
int cmd_poag(const std::string& path, const CommonOptions& common, std::ostream& out);
int cmd_sweep(const std::string& path, const CommonOptions& common, std::ostream& out);
int cmd_figures(const std::string& name, const CommonOptions& common, std::ostream& out);

}  // namespace dersim::cli
