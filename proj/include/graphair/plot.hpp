#pragma once

// Minimal SVG charts: labelled scatter, grouped bars and line series.

#include "graphair/common.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace graphair::plot {

struct Point {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline constexpr double kWidth = 640, kHeight = 440, kLeft = 70, kRight = 30, kTop = 40, kBottom = 60;
inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string color(std::size_t k) { return kPalette[k % std::size(kPalette)]; }

struct Range {
  double lo = 0.0, hi = 1.0;

  void pad() {
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

inline Range range_of(const std::vector<double>& v) {
  Range r{v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()),
          v.empty() ? 1.0 : *std::max_element(v.begin(), v.end())};
  r.pad();
  return r;
}

class Canvas {
 public:
  Canvas(const std::string& title, const std::string& x_label, const std::string& y_label, Range x, Range y)
      : x_(x), y_(y) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
         << "</text>\n"
         << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">" << escape(x_label)
         << "</text>\n"
         << "<text transform=\"translate(18," << kHeight / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
         << escape(y_label) << "</text>\n";
    axes();
  }

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  std::ostringstream& raw() { return out_; }

  void circle(double x, double y, const std::string& fill) {
    out_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"5\" fill=\"" << fill << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double dx = 7, double dy = -7) {
    out_ << "<text x=\"" << px(x) + dx << "\" y=\"" << py(y) + dy << "\">" << escape(s) << "</text>\n";
  }

  void save(const std::filesystem::path& path) {
    out_ << "</svg>\n";
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << out_.str();
  }

 private:
  void axes() {
    out_ << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
         << kHeight - kBottom << "\" stroke=\"black\"/>\n"
         << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
         << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double xv = x_.lo + (x_.hi - x_.lo) * t / 4.0, yv = y_.lo + (y_.hi - y_.lo) * t / 4.0;
      out_ << "<text x=\"" << px(xv) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
           << tick(xv) << "</text>\n"
           << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << tick(yv)
           << "</text>\n";
    }
  }

  static std::string tick(double v) {
    std::ostringstream s;
    s.precision(std::abs(v) >= 100 ? 0 : 2);
    s << std::fixed << v;
    return s.str();
  }

  Range x_, y_;
  std::ostringstream out_;
};

}  // namespace detail

/// Labelled scatter plot.
inline void scatter(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Point>& points) {
  std::vector<double> xs, ys;
  for (const Point& p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  detail::Canvas c(title, x_label, y_label, detail::range_of(xs), detail::range_of(ys));
  for (std::size_t k = 0; k < points.size(); ++k) {
    c.circle(points[k].x, points[k].y, detail::color(k));
    c.text(points[k].x, points[k].y, points[k].label);
  }
  c.save(path);
}

/// Grouped bar chart: one group per category, one bar per series (series.y
/// holds one value per category; series.x is ignored).
inline void bars(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                 const std::string& y_label, const std::vector<std::string>& categories,
                 const std::vector<Series>& series) {
  std::vector<double> all{0.0};
  for (const Series& s : series) all.insert(all.end(), s.y.begin(), s.y.end());
  detail::Range yr = detail::range_of(all);
  detail::Canvas c(title, x_label, y_label, detail::Range{0.0, static_cast<double>(categories.size())}, yr);
  const double slot = 1.0 / static_cast<double>(std::max<std::size_t>(series.size(), 1) + 1);
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t k = 0; k < categories.size() && k < series[s].y.size(); ++k) {
      const double x0 = static_cast<double>(k) + slot * (static_cast<double>(s) + 0.5);
      const double v = series[s].y[k];
      const double top = c.py(std::max(v, 0.0)), base = c.py(std::min(v, 0.0));
      c.raw() << "<rect x=\"" << c.px(x0) << "\" y=\"" << top << "\" width=\"" << c.px(x0 + slot) - c.px(x0)
              << "\" height=\"" << base - top << "\" fill=\"" << detail::color(s) << "\"/>\n";
    }
    c.raw() << "<rect x=\"" << detail::kWidth - 150 << "\" y=\"" << 40 + 18 * s << "\" width=\"12\" height=\"12\" fill=\""
            << detail::color(s) << "\"/><text x=\"" << detail::kWidth - 132 << "\" y=\"" << 50 + 18 * s << "\">"
            << detail::escape(series[s].name) << "</text>\n";
  }
  if (categories.size() <= 25) {
    for (std::size_t k = 0; k < categories.size(); ++k) {
      c.raw() << "<text x=\"" << c.px(static_cast<double>(k) + 0.5) << "\" y=\"" << detail::kHeight - detail::kBottom + 30
              << "\" text-anchor=\"middle\" font-size=\"9\">" << detail::escape(categories[k]) << "</text>\n";
    }
  }
  c.save(path);
}

/// Line chart with markers.
inline void lines(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                  const std::string& y_label, const std::vector<Series>& series) {
  std::vector<double> xs, ys;
  for (const Series& s : series) {
    require_dims(s.x.size() == s.y.size(), "plot::lines: x/y length mismatch");
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  detail::Canvas c(title, x_label, y_label, detail::range_of(xs), detail::range_of(ys));
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::ostringstream pts;
    for (std::size_t k = 0; k < series[s].x.size(); ++k) pts << c.px(series[s].x[k]) << ',' << c.py(series[s].y[k]) << ' ';
    c.raw() << "<polyline fill=\"none\" stroke=\"" << detail::color(s) << "\" stroke-width=\"2\" points=\"" << pts.str()
            << "\"/>\n";
    for (std::size_t k = 0; k < series[s].x.size(); ++k) c.circle(series[s].x[k], series[s].y[k], detail::color(s));
    c.raw() << "<text x=\"" << detail::kWidth - 150 << "\" y=\"" << 50 + 18 * s << "\" fill=\"" << detail::color(s)
            << "\">" << detail::escape(series[s].name) << "</text>\n";
  }
  c.save(path);
}

}  // namespace graphair::plot
