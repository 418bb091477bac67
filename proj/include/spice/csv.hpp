#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spice/errors.hpp"
#include "spice/matrix.hpp"

namespace spice {

// All files use the same dialect: comma separator, one header row,
// '.' decimal point, NA for unavailable cells, no quoting.

/// Doubles are written with 17 significant digits so a re-read reproduces
/// the value bit for bit.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int n_rows() const { return static_cast<int>(rows.size()); }
  int n_cols() const { return static_cast<int>(header.size()); }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  CsvTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (line_no == 1) {
      t.header = cells;
    } else {
      if (cells.size() != t.header.size())
        throw ParseError(path + ": line " + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " fields, expected " +
                         std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw ParseError(path + ": empty file (no header row)");
  return t;
}

inline double parse_cell(const std::string& s, const std::string& path, int line_no,
                         int col_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError(path + ": line " + std::to_string(line_no) + ", column " +
                     std::to_string(col_no) + ": non-numeric cell '" + s + "'");
  return v;
}

/// Reads an n x p numeric matrix with a header row. Column names are
/// returned alongside the values.
inline std::pair<Matrix, std::vector<std::string>> read_numeric_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const int n = t.n_rows();
  const int p = t.n_cols();
  if (n < 1) throw ParseError(path + ": no data rows");
  Matrix m(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      m(i, j) = parse_cell(t.rows[i][j], path, i + 2, j + 1);
  return {std::move(m), t.header};
}

inline void write_matrix_csv(const std::string& path, const SymmetricMatrix& m,
                             const std::vector<std::string>& colnames) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  const int p = m.dim();
  for (int j = 0; j < p; ++j) out << (j ? "," : "") << colnames[j];
  out << "\n";
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << "\n";
  }
}

inline void write_mask_csv(const std::string& path, const Mask& mask,
                           const std::vector<std::string>& colnames) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  const int p = mask.dim();
  for (int j = 0; j < p; ++j) out << (j ? "," : "") << colnames[j];
  out << "\n";
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) out << (j ? "," : "") << (mask(i, j) ? 1 : 0);
    out << "\n";
  }
}

inline std::vector<std::string> default_colnames(int p) {
  std::vector<std::string> names(p);
  for (int j = 0; j < p; ++j) names[j] = "x" + std::to_string(j + 1);
  return names;
}

}  // namespace spice
