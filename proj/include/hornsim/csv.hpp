#pragma once

#include <string>
#include <vector>

namespace hornsim {

// %.9g, the repository-wide float format for CSV. Nine significant digits
// round-trip through parse and re-print byte-identically.
std::string format_g9(double v);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
double csv_number(const std::string& cell);  // strict double parse

}  // namespace hornsim
