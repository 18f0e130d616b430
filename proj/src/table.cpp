#include "tiered/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tiered/errors.hpp"

namespace tiered {

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw ValidationError("table has no column '" + name + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path.string() + ": cannot open for writing");
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw ValidationError("row length differs from the header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
  if (!out) throw ValidationError(path.string() + ": write failed");
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.columns = split(line);
  if (t.columns.empty()) throw ValidationError(path.string() + ": missing header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.columns.size()) + " fields");
    }
    std::vector<double> row;
    for (const std::string& c : cells) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

double ComparisonReport::max_deviation() const {
  double m = 0.0;
  for (const ColumnDeviation& c : columns) m = std::max(m, c.max);
  return m;
}

ComparisonReport compare_tables(const Table& a, const Table& b) {
  if (a.columns != b.columns) throw ValidationError("tables have different columns");
  if (a.rows.size() != b.rows.size()) {
    throw ValidationError("grid mismatch: " + std::to_string(a.rows.size()) + " vs " + std::to_string(b.rows.size()) +
                          " rows");
  }
  ComparisonReport r;
  r.rows = a.rows.size();
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i][0] != b.rows[i][0]) {
      throw ValidationError("grid mismatch at row " + std::to_string(i + 1) + ": " + format_number(a.rows[i][0]) +
                            " vs " + format_number(b.rows[i][0]));
    }
  }
  for (std::size_t c = 1; c < a.columns.size(); ++c) {
    ColumnDeviation d{a.columns[c], 0.0, 0.0};
    double sq = 0.0;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      const double e = std::abs(a.rows[i][c] - b.rows[i][c]);
      d.max = std::max(d.max, e);
      sq += e * e;
    }
    d.rms = r.rows ? std::sqrt(sq / static_cast<double>(r.rows)) : 0.0;
    r.columns.push_back(d);
  }
  return r;
}

}  // namespace tiered
