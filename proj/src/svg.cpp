#include "fsmap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace fsmap {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_series(std::string name, std::vector<double> xs, std::vector<double> ys, Style style) {
  if (xs.size() != ys.size()) throw std::invalid_argument("series x and y differ in length");
  series_.push_back({std::move(name), std::move(xs), std::move(ys), style});
}

std::string SvgPlot::render(int width, int height) const {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  const auto tx = [this](double v) { return log_x_ ? std::log10(v) : v; };
  const auto ty = [this](double v) { return log_y_ ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series_)
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      const double x = tx(s.xs[i]), y = ty(s.ys[i]);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double ypad = 0.05 * (y1 - y0);
  y0 -= ypad, y1 += ypad;
  const auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return top + ph - (ty(y) - y0) / (y1 - y0) * ph; };

  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                  std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title_) + "</text>\n";
  o += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    const double sx = left + pw * i / 4.0, sy = top + ph - ph * i / 4.0;
    o += "<text x=\"" + num(sx) + "\" y=\"" + num(top + ph + 16) + "\" text-anchor=\"middle\">" +
         tick_label(log_x_ ? std::pow(10.0, fx) : fx) + "</text>\n";
    o += "<text x=\"" + num(left - 6) + "\" y=\"" + num(sy + 4) + "\" text-anchor=\"end\">" +
         tick_label(log_y_ ? std::pow(10.0, fy) : fy) + "</text>\n";
  }
  o += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 10.0) + "\" text-anchor=\"middle\">" +
       escape(x_label_) + "</text>\n";
  o += "<text transform=\"translate(16," + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(y_label_) + "</text>\n";
  for (std::size_t k = 0; k < series_.size(); ++k) {
    const auto& s = series_[k];
    const std::string color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (s.style == Style::Line) {
      std::string pts;
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!std::isfinite(tx(s.xs[i])) || !std::isfinite(ty(s.ys[i]))) continue;
        pts += num(px(s.xs[i])) + "," + num(py(s.ys[i])) + " ";
      }
      o += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!std::isfinite(tx(s.xs[i])) || !std::isfinite(ty(s.ys[i]))) continue;
        o += "<circle cx=\"" + num(px(s.xs[i])) + "\" cy=\"" + num(py(s.ys[i])) + "\" r=\"2.5\" fill=\"" + color +
             "\" fill-opacity=\"0.7\"/>\n";
      }
    }
    const double ly = top + 14 + 18.0 * k;
    o += "<rect x=\"" + num(left + pw + 10) + "\" y=\"" + num(ly - 9) + "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
    o += "<text x=\"" + num(left + pw + 28) + "\" y=\"" + num(ly + 1) + "\">" + escape(s.name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace fsmap
