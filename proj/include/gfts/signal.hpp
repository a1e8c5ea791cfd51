#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gfts/error.hpp"
#include "gfts/linalg.hpp"

namespace gfts {

inline constexpr double kDefaultRankTolerance = 1e-10;

/// N×K dynamic data X: one row per node, one column per time-step.
class SignalMatrix {
 public:
  SignalMatrix() = default;

  SignalMatrix(Matrix data, std::vector<std::string> node_ids, double timestep_seconds = 1.0,
               double rank_tolerance = kDefaultRankTolerance)
      : data_(std::move(data)),
        node_ids_(std::move(node_ids)),
        timestep_seconds_(timestep_seconds),
        rank_tolerance_(rank_tolerance) {
    if (data_.rows() < 1 || data_.cols() < 1)
      throw DataError("signal matrix needs at least one node and one time-step");
    if (!data_.allFinite()) throw DataError("signal matrix has non-finite entries");
    if (node_ids_.empty()) {
      for (Index i = 0; i < data_.rows(); ++i) node_ids_.push_back("n" + std::to_string(i));
    }
    if (static_cast<Index>(node_ids_.size()) != data_.rows()) {
      throw DataError("signal matrix has " + std::to_string(data_.rows()) + " rows but " +
                      std::to_string(node_ids_.size()) + " node ids");
    }
    if (!(timestep_seconds_ > 0.0)) throw DataError("timestep_seconds must be positive");
    if (!(rank_tolerance_ > 0.0)) throw DataError("rank_tolerance must be positive");
    rank_ = numerical_rank(data_, rank_tolerance_);
  }

  const Matrix& data() const { return data_; }
  Index node_count() const { return data_.rows(); }
  Index step_count() const { return data_.cols(); }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  double timestep_seconds() const { return timestep_seconds_; }
  double rank_tolerance() const { return rank_tolerance_; }

  /// Numerical rank: singular values above rank_tolerance · σ_max.
  Index rank() const { return rank_; }
  /// Zero dynamics; no operator can be built from it.
  bool degenerate() const { return rank_ == 0; }

 private:
  Matrix data_;
  std::vector<std::string> node_ids_;
  double timestep_seconds_ = 1.0;
  double rank_tolerance_ = kDefaultRankTolerance;
  Index rank_ = 0;
};

struct CsvTable {
  Matrix values;
  std::vector<std::string> row_labels;  // filled only when a label column was read
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

/// Rectangular numeric CSV; with `label_column` the first cell of each row is
/// taken as the node id.
inline CsvTable parse_signal_csv(std::istream& in, bool label_column = false) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::string line;
  std::size_t width = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    std::size_t first = 0;
    if (label_column) {
      if (cells.empty()) throw DataError("row " + std::to_string(line_no) + ": missing node id");
      labels.push_back(cells[0]);
      first = 1;
    }
    std::vector<double> row;
    for (std::size_t c = first; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_double(cells[c], v) || !std::isfinite(v)) {
        throw DataError("row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                        ": '" + cells[c] + "' is not a finite number");
      }
      row.push_back(v);
    }
    if (rows.empty()) {
      width = row.size();
      if (width == 0) throw DataError("row " + std::to_string(line_no) + ": no numeric cells");
    } else if (row.size() != width) {
      throw DataError("row " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                      " values, expected " + std::to_string(width) + " (ragged CSV)");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("CSV has no data rows");
  CsvTable out;
  out.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      out.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  out.row_labels = std::move(labels);
  return out;
}

inline CsvTable read_csv_file(const std::string& path, bool label_column = false) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path + "'");
  return parse_signal_csv(in, label_column);
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m,
                             const std::vector<std::string>* row_labels = nullptr) {
  for (Index i = 0; i < m.rows(); ++i) {
    if (row_labels) out << (*row_labels)[static_cast<std::size_t>(i)] << ',';
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

/// Loads X. Without a header the row count must equal node_ids.size(); with
/// a header the ids come from the file (and must match node_ids if given).
inline SignalMatrix load_signal_csv(const std::string& path, std::vector<std::string> node_ids,
                                    bool header = false, double timestep_seconds = 1.0,
                                    double rank_tolerance = kDefaultRankTolerance) {
  auto table = read_csv_file(path, header);
  if (header) {
    if (!node_ids.empty() && node_ids != table.row_labels)
      throw DataError("CSV node ids do not match the expected node list");
    node_ids = std::move(table.row_labels);
  } else if (static_cast<Index>(node_ids.size()) != table.values.rows()) {
    throw DataError("CSV has " + std::to_string(table.values.rows()) + " rows but " +
                    std::to_string(node_ids.size()) + " node ids were given");
  }
  return SignalMatrix(std::move(table.values), std::move(node_ids), timestep_seconds,
                      rank_tolerance);
}

inline void save_signal_csv(const SignalMatrix& x, const std::string& path, bool header = false) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file '" + path + "'");
  write_matrix_csv(out, x.data(), header ? &x.node_ids() : nullptr);
}

}  // namespace gfts
