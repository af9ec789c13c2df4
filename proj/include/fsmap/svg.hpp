#pragma once

#include <string>
#include <vector>

namespace fsmap {

// Minimal line/scatter plotter producing standalone SVG.
class SvgPlot {
 public:
  enum class Style { Line, Scatter };

  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void add_series(std::string name, std::vector<double> xs, std::vector<double> ys, Style style = Style::Line);
  void set_log_x(bool on) { log_x_ = on; }
  void set_log_y(bool on) { log_y_ = on; }
  std::string render(int width = 640, int height = 420) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> xs, ys;
    Style style;
  };
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  bool log_x_ = false, log_y_ = false;
};

}  // namespace fsmap
