#pragma once

// Minimal CSV table with round-trippable number formatting.

#include "levyldp/core.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace levyldp {

/// Shortest-exact formatting (%.17g) so written numbers read back bit-identical.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvTable {
 public:
  using Cell = std::variant<double, long long, std::string>;

  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  void add(std::vector<Cell> row) {
    require(row.size() == header_.size(), "csv: row has " + std::to_string(row.size()) + " cells, header has " +
                                              std::to_string(header_.size()));
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::ostringstream os;
    write_row(os, header_);
    for (const auto& r : rows_) {
      std::vector<std::string> cells;
      for (const auto& c : r) cells.push_back(to_string(c));
      write_row(os, cells);
    }
    return os.str();
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), "csv: cannot open '" + path + "' for writing");
    f << str();
  }

  /// Reads a numeric table (every non-header cell parsed as double).
  static std::pair<std::vector<std::string>, std::vector<std::vector<double>>> load_numeric(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "csv: cannot open '" + path + "'");
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    if (std::getline(f, line)) header = split(line);
    long lineno = 1;
    while (std::getline(f, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<double> r;
      for (const auto& cell : split(line)) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
          v = std::stod(cell, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        require(pos == cell.size() && !cell.empty(),
                "csv: '" + path + "' line " + std::to_string(lineno) + ": not a number: '" + cell + "'");
        r.push_back(v);
      }
      require(r.size() == header.size(), "csv: '" + path + "' line " + std::to_string(lineno) + ": wrong cell count");
      rows.push_back(std::move(r));
    }
    return {header, rows};
  }

 private:
  static std::string to_string(const Cell& c) {
    if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
    if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
    return std::get<std::string>(c);
  }
  static void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  }
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    out.push_back(cur);
    return out;
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

}  // namespace levyldp
