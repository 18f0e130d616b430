#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tiered {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
};

// 17 significant digits in general notation
std::string format_number(double v);

void write_csv(const std::filesystem::path& path, const Table& table);
Table read_csv(const std::filesystem::path& path);

struct ColumnDeviation {
  std::string column;
  double max = 0.0;
  double rms = 0.0;
};

struct ComparisonReport {
  std::size_t rows = 0;
  std::vector<ColumnDeviation> columns;  // every column except t

  double max_deviation() const;
};

// the first column is the grid and must match exactly
ComparisonReport compare_tables(const Table& a, const Table& b);

}  // namespace tiered
