#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dersim/csv.hpp"
#include "dersim/market.hpp"

namespace dersim {

/// Reference parameters shared by the figure sweeps.
struct FigureParams {
  double gamma = 2.5;
  double mu = 10.0;
  double lambda_da = 4.0;
  double lambda_rt = 4.0;
  double kappa = 3.25;
  double demand_per_prosumer = 10.0;
  int n_prosumers = 10;
  double d0 = 100.0;
  int points = 41;
};

struct FigureFile {
  std::string filename;
  CsvTable table;
};

const std::vector<std::string_view>& figure_names();

/// Dependent-uniform, linear-utility scenario at (mu, sigma).
GameScenario figure_scenario(const FigureParams& p, double mu, double sigma);

/// Builds the CSV tables of one figure. Rows whose solve fails carry the
/// error in a status column with the numeric cells left empty.
std::vector<FigureFile> make_figure(std::string_view name, const CurveOptions& options,
                                    const FigureParams& params = {});

}  // namespace dersim
