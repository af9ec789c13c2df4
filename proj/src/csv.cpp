#include "fsmap/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace fsmap {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt(long v) { return std::to_string(v); }

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("CSV row width differs from header");
  rows_.push_back(std::move(row));
}

std::vector<double> CsvTable::column(const std::string& name) const {
  std::size_t idx = header_.size();
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) idx = i;
  if (idx == header_.size()) throw std::invalid_argument("no CSV column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(std::stod(r[idx]));
  return out;
}

std::string CsvTable::str() const {
  std::string s;
  const auto line = [&s](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return s;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path.string());
  CsvTable t(split(line));
  while (std::getline(in, line))
    if (!line.empty()) t.add_row(split(line));
  return t;
}

CsvTable dataset_csv(const Dataset& data) {
  std::vector<std::string> header;
  for (Eigen::Index d = 0; d < data.input_dim(); ++d) header.push_back("x_" + std::to_string(d));
  if (data.classification) {
    header.push_back("label");
  } else {
    for (Eigen::Index k = 0; k < data.targets.cols(); ++k) header.push_back("y_" + std::to_string(k));
  }
  CsvTable t(header);
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    std::vector<std::string> row;
    for (Eigen::Index d = 0; d < data.input_dim(); ++d) row.push_back(fmt(data.inputs(n, d)));
    if (data.classification) {
      row.push_back(fmt(data.labels[n]));
    } else {
      for (Eigen::Index k = 0; k < data.targets.cols(); ++k) row.push_back(fmt(data.targets(n, k)));
    }
    t.add_row(std::move(row));
  }
  return t;
}

CsvTable train_result_csv(const TrainResult& result) {
  CsvTable t({"step", "loss", "diagnostic"});
  for (std::size_t s = 0; s < result.loss_trace.size(); ++s) t.add(s, result.loss_trace[s], result.diag_trace[s]);
  return t;
}

CsvTable posterior_grid_csv(const PosteriorGrid& grid) {
  std::vector<std::string> header;
  for (int i = grid.dims() - 1; i >= 0; --i) header.push_back(grid.param_names[i]);
  header.push_back("log_p_param");
  header.push_back("log_p_fs");
  CsvTable t(header);
  for (Eigen::Index i = 0; i < grid.log_param_density.rows(); ++i)
    for (Eigen::Index j = 0; j < grid.log_param_density.cols(); ++j) {
      std::vector<std::string> row;
      if (grid.dims() == 2) row.push_back(fmt(grid.axes[1](j)));
      row.push_back(fmt(grid.axes[0](i)));
      row.push_back(fmt(grid.log_param_density(i, j)));
      row.push_back(fmt(grid.log_fs_density(i, j)));
      t.add_row(std::move(row));
    }
  return t;
}

}  // namespace fsmap
