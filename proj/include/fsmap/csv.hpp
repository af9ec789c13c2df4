#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fsmap/analysis.hpp"
#include "fsmap/optimize.hpp"
#include "fsmap/probability.hpp"

namespace fsmap {

// Shortest round-trip decimal representation.
std::string fmt(double v);
std::string fmt(long v);
inline std::string fmt(int v) { return fmt(static_cast<long>(v)); }
inline std::string fmt(std::size_t v) { return fmt(static_cast<long>(v)); }
inline std::string fmt(const std::string& v) { return v; }
inline std::string fmt(const char* v) { return v; }

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  template <class... Ts>
  void add(const Ts&... values) {
    add_row({fmt(values)...});
  }
  void add_row(std::vector<std::string> row);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::vector<double> column(const std::string& name) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
CsvTable read_csv(const std::filesystem::path& path);

CsvTable dataset_csv(const Dataset& data);
CsvTable train_result_csv(const TrainResult& result);
// Columns: parameter names in reverse order, then log_p_param, log_p_fs.
CsvTable posterior_grid_csv(const PosteriorGrid& grid);

}  // namespace fsmap
