#include "dmon/io.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dmon {

FeatureMatrix load_features(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open feature matrix: " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool skipped_header = !has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (cell.find_first_not_of(" \t\r", pos) != std::string::npos) {
          throw std::invalid_argument(cell);
        }
        row.push_back(v);
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": bad feature value '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("empty feature matrix: " + path.string());

  FeatureMatrix x(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return x;
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& x) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write feature matrix: " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j > 0) out << ",";
      out << x(i, j);
    }
    out << "\n";
  }
}

HardPartition load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open labels: " + path.string());
  std::vector<int> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      ids.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad label '" +
                        line + "'");
    }
  }
  if (ids.empty()) throw ConfigError("empty label file: " + path.string());
  return HardPartition(std::move(ids));
}

void save_labels(const std::filesystem::path& path, const HardPartition& p) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write labels: " + path.string());
  for (int c : p.assignments) out << c << "\n";
}

}  // namespace dmon
