#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dersim/equilibrium.hpp"

namespace dersim {

/// 10 significant digits, '.' separator. Non-finite values become empty cells.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;  // extra '# key=value' lines
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells);
  void add_numbers(const std::vector<double>& values);
};

/// Written first in every output file.
std::vector<std::pair<std::string, std::string>> run_metadata(const SolverOptions& solver);

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

}  // namespace dersim
