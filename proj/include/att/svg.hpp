#pragma once

// Bare-bones SVG bar/line charts for the diagnostics outputs. Enough to eyeball
// a histogram or a step-selection trace; not a plotting library.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "att/errors.hpp"

namespace att::svg {

namespace detail {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 42.0;

inline std::string header(const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
    << "font-family=\"sans-serif\">" << title << "</text>\n"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
    << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
    << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  return s.str();
}

inline void write(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out << body << "</svg>\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline void bar_chart(const std::vector<double>& values, const std::string& title,
                      const std::filesystem::path& path) {
  using namespace detail;
  std::string body = header(title);
  if (!values.empty()) {
    const double vmax = std::max(1.0, *std::max_element(values.begin(), values.end()));
    const double plot_w = kWidth - 2 * kMargin;
    const double plot_h = kHeight - 2 * kMargin;
    const double bar_w = plot_w / static_cast<double>(values.size());
    std::ostringstream s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double h = plot_h * values[i] / vmax;
      s << "<rect x=\"" << kMargin + bar_w * static_cast<double>(i) + 1 << "\" y=\""
        << kHeight - kMargin - h << "\" width=\"" << std::max(1.0, bar_w - 2) << "\" height=\"" << h
        << "\" fill=\"steelblue\"/>\n";
    }
    body += s.str();
  }
  write(path, body);
}

inline void line_chart(const std::vector<std::pair<double, double>>& points,
                       const std::string& title, const std::filesystem::path& path) {
  using namespace detail;
  std::string body = header(title);
  if (points.size() >= 2) {
    double xmin = points.front().first, xmax = xmin, ymin = points.front().second, ymax = ymin;
    for (const auto& [x, y] : points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : points) {
      const double px = kMargin + (kWidth - 2 * kMargin) * (x - xmin) / (xmax - xmin);
      const double py = kHeight - kMargin - (kHeight - 2 * kMargin) * (y - ymin) / (ymax - ymin);
      s << px << "," << py << " ";
    }
    s << "\"/>\n";
    body += s.str();
  }
  write(path, body);
}

}  // namespace att::svg
