#ifndef GPCAL_DATASET_HPP
#define GPCAL_DATASET_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gpcal/errors.hpp"

namespace gpcal {

// Column roles inside a delimiter-separated data file.
struct DataSchema {
  std::vector<std::string> conditions;  // experimental-condition columns
  std::string output;                   // observed-output column
  std::vector<std::string> h_columns;   // optional precomputed derivative rows
};

struct Dataset {
  DataSchema schema;
  std::vector<std::string> columns;  // full header, file order
  Eigen::MatrixXd conditions;        // n x d
  Eigen::VectorXd y;                 // n
  Eigen::MatrixXd h;                 // n x m (zero columns when absent)

  Eigen::Index n() const { return conditions.rows(); }
  Eigen::Index d() const { return conditions.cols(); }
};

namespace detail {

inline char sniff_delimiter(const std::string& header) {
  if (header.find('\t') != std::string::npos) return '\t';
  if (header.find(',') != std::string::npos) return ',';
  if (header.find(';') != std::string::npos) return ';';
  return ' ';
}

inline std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
  }
  std::string tok;
  std::istringstream iss(line);
  while (std::getline(iss, tok, delim)) {
    // Trim surrounding whitespace.
    const auto b = tok.find_first_not_of(" \t\r");
    const auto e = tok.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : tok.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace detail

// Parse a header-rowed delimiter-separated numeric text file and resolve
// the schema columns.  Rows are reported with the header on line 1.
inline Dataset load_dataset(const std::filesystem::path& path,
                            const DataSchema& schema) {
  if (schema.conditions.empty())
    throw contract_error("load_dataset: schema needs at least one condition column");
  if (schema.output.empty())
    throw contract_error("load_dataset: schema needs an output column");

  std::ifstream in(path);
  if (!in) throw data_error("cannot open data file \"" + path.string() + "\"");

  std::string header;
  if (!std::getline(in, header))
    throw data_error("empty dataset: \"" + path.string() + "\" has no header");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const char delim = detail::sniff_delimiter(header);
  const std::vector<std::string> columns = detail::split_row(header, delim);

  const auto column_index = [&](const std::string& name) {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end())
      throw data_error("missing column \"" + name + "\" in \"" +
                       path.string() + "\"");
    return static_cast<Eigen::Index>(it - columns.begin());
  };

  std::vector<Eigen::Index> cond_idx, h_idx;
  for (const auto& c : schema.conditions) cond_idx.push_back(column_index(c));
  const Eigen::Index out_idx = column_index(schema.output);
  for (const auto& c : schema.h_columns) h_idx.push_back(column_index(c));

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_row(line, delim);
    if (cells.size() != columns.size())
      throw data_error("ragged row " + std::to_string(line_no) + " in \"" +
                       path.string() + "\": expected " +
                       std::to_string(columns.size()) + " cells, got " +
                       std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0')
        throw data_error("non-numeric value \"" + cells[c] + "\" at row " +
                         std::to_string(line_no) + ", column \"" + columns[c] +
                         "\"");
      if (!std::isfinite(v))
        throw data_error("non-finite value at row " + std::to_string(line_no) +
                         ", column \"" + columns[c] + "\"");
      row[c] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw data_error("empty dataset: \"" + path.string() +
                     "\" contains a header but no rows");

  Dataset ds;
  ds.schema = schema;
  ds.columns = columns;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  ds.conditions.resize(n, static_cast<Eigen::Index>(cond_idx.size()));
  ds.y.resize(n);
  ds.h.resize(n, static_cast<Eigen::Index>(h_idx.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cond_idx.size(); ++c)
      ds.conditions(i, static_cast<Eigen::Index>(c)) = rows[i][cond_idx[c]];
    ds.y(i) = rows[i][out_idx];
    for (std::size_t c = 0; c < h_idx.size(); ++c)
      ds.h(i, static_cast<Eigen::Index>(c)) = rows[i][h_idx[c]];
  }
  return ds;
}

// Tab-separated table writer.  Values are printed with %.17g so a
// written file reloads bit-identically.
inline void save_table(const std::filesystem::path& path,
                       const std::vector<std::string>& columns,
                       const Eigen::MatrixXd& values) {
  if (values.cols() != static_cast<Eigen::Index>(columns.size()))
    throw contract_error("save_table: column count mismatch");
  std::ofstream out(path);
  if (!out) throw data_error("cannot write \"" + path.string() + "\"");
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << (c ? "\t" : "") << columns[c];
  out << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", values(i, c));
      out << (c ? "\t" : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw data_error("write failed for \"" + path.string() + "\"");
}

}  // namespace gpcal

#endif
