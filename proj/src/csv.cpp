#include "dersim/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dersim/errors.hpp"
#include "dersim/scenario_file.hpp"

#ifndef DERSIM_GIT_DESCRIBE
#define DERSIM_GIT_DESCRIBE "unknown"
#endif

namespace dersim {

std::string format_number(double v) {
  if (!std::isfinite(v)) return {};
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size()) {
    throw Error("csv: row has " + std::to_string(cells.size()) + " cells, expected " +
                std::to_string(columns.size()));
  }
  rows.push_back(std::move(cells));
}

void CsvTable::add_numbers(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  add_row(std::move(cells));
}

std::vector<std::pair<std::string, std::string>> run_metadata(const SolverOptions& solver) {
  return {{"schema_version", std::string(kSchemaVersion)},
          {"seed", std::to_string(solver.seed)},
          {"draws", std::to_string(solver.draws)},
          {"tol_x", format_number(solver.tol_x)},
          {"tol_rho", format_number(solver.tol_rho)},
          {"rho_grid_points", std::to_string(solver.rho_grid_points)},
          {"git_describe", DERSIM_GIT_DESCRIBE}};
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& [k, v] : table.meta) out << "# " << k << '=' << v << '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(out, table);
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace dersim
