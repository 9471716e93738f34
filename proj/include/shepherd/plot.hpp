#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shepherd/harness.hpp"
#include "shepherd/stats.hpp"

namespace shepherd::plot {

// ---- CSV readers for the result-file schemas ----

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::string& expected_header) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("input file not found: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::invalid_argument("empty input file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw std::invalid_argument("unexpected schema in " + path + ": got '" + line +
                                "', expected '" + expected_header + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv(line));
  }
  return rows;
}

}  // namespace detail

struct LearningPoint {
  std::int64_t episode = 0;
  double reward = 0;
  double moving_average = 0;
};

inline std::vector<LearningPoint> read_learning_curve_csv(const std::string& path) {
  std::vector<LearningPoint> out;
  for (const auto& r : detail::read_csv(path, "episode_index,cumulative_reward,moving_average"))
    out.push_back({std::stoll(r[0]), std::stod(r[1]), std::stod(r[2])});
  return out;
}

struct EpisodeCsvRow {
  std::int64_t episode_index = 0;
  std::string controller;
  bool success = false;
  std::optional<double> n_star;
  double path_length = 0;
};

inline std::vector<EpisodeCsvRow> read_episodes_csv(const std::string& path) {
  std::vector<EpisodeCsvRow> out;
  for (const auto& r : detail::read_csv(
           path, "episode_index,seed,controller,success,n_star,path_length,D,lambda,kT")) {
    EpisodeCsvRow row;
    row.episode_index = std::stoll(r[0]);
    row.controller = r[2];
    row.success = r[3] == "1";
    if (!r[4].empty()) row.n_star = std::stod(r[4]);
    row.path_length = std::stod(r[5]);
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<harness::ScaleRow> read_scale_csv(const std::string& path) {
  std::vector<harness::ScaleRow> out;
  for (const auto& r :
       detail::read_csv(path, "step,mean_radius,std_radius,min_radius,max_radius,chi"))
    out.push_back({std::stoll(r[0]), std::stod(r[1]), std::stod(r[2]), std::stod(r[3]),
                   std::stod(r[4]), std::stod(r[5])});
  return out;
}

struct Marker {
  bool is_herder = false;
  double x = 0;
  double y = 0;
};

inline std::vector<Marker> read_final_state_csv(const std::string& path) {
  std::vector<Marker> out;
  for (const auto& r : detail::read_csv(path, "kind,index,x,y"))
    out.push_back({r[0] == "herder", std::stod(r[2]), std::stod(r[3])});
  return out;
}

// ---- minimal SVG canvas with a data-to-pixel transform ----

namespace detail {

struct Canvas {
  double width = 640, height = 420;
  double margin = 50;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  std::ostringstream body;

  void set_range(double xl, double xh, double yl, double yh) {
    x_lo = xl;
    x_hi = xh == xl ? xl + 1 : xh;
    y_lo = yl;
    y_hi = yh == yl ? yl + 1 : yh;
  }

  double px(double x) const {
    return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin);
  }
  double py(double y) const {
    return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin);
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double stroke_width, const std::string& dash = "") {
    body << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << stroke_width
         << "\"";
    if (!dash.empty()) body << " stroke-dasharray=\"" << dash << "\"";
    body << " points=\"";
    for (const auto& [x, y] : pts) body << px(x) << ',' << py(y) << ' ';
    body << "\"/>\n";
  }

  void circle(double x, double y, double r_px, const std::string& fill,
              const std::string& stroke = "none", const std::string& dash = "") {
    body << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"" << r_px << "\" fill=\""
         << fill << "\" stroke=\"" << stroke << "\"";
    if (!dash.empty()) body << " stroke-dasharray=\"" << dash << "\"";
    body << "/>\n";
  }

  void rect(double x0, double y0, double x1, double y1, const std::string& fill,
            const std::string& stroke) {
    body << "<rect x=\"" << px(x0) << "\" y=\"" << py(y1) << "\" width=\"" << px(x1) - px(x0)
         << "\" height=\"" << py(y0) - py(y1) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
         << "\"/>\n";
  }

  void line(double x0, double y0, double x1, double y1, const std::string& color,
            double stroke_width = 1.0) {
    body << "<line x1=\"" << px(x0) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(x1) << "\" y2=\""
         << py(y1) << "\" stroke=\"" << color << "\" stroke-width=\"" << stroke_width << "\"/>\n";
  }

  void text(double px_x, double px_y, const std::string& s, const std::string& anchor = "start") {
    body << "<text x=\"" << px_x << "\" y=\"" << px_y
         << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"" << anchor << "\">" << s
         << "</text>\n";
  }

  void axes(const std::string& x_label, const std::string& y_label) {
    body << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
         << "\" height=\"" << height - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", x_lo);
    text(margin, height - margin + 16, buf, "middle");
    std::snprintf(buf, sizeof buf, "%g", x_hi);
    text(width - margin, height - margin + 16, buf, "middle");
    std::snprintf(buf, sizeof buf, "%g", y_lo);
    text(margin - 6, height - margin, buf, "end");
    std::snprintf(buf, sizeof buf, "%g", y_hi);
    text(margin - 6, margin + 4, buf, "end");
    text(width / 2, height - 10, x_label, "middle");
    text(12, margin - 10, y_label);
  }

  std::string finish() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body.str() << "</svg>\n";
    return out.str();
  }
};

}  // namespace detail

/// Per-episode reward scatter-line plus its moving average.
inline std::string learning_curve_svg(const std::vector<LearningPoint>& points) {
  if (points.empty()) throw std::invalid_argument("learning curve: no data");
  detail::Canvas c;
  double ylo = points[0].reward, yhi = points[0].reward;
  for (const auto& p : points) {
    ylo = std::min({ylo, p.reward, p.moving_average});
    yhi = std::max({yhi, p.reward, p.moving_average});
  }
  c.set_range(static_cast<double>(points.front().episode),
              static_cast<double>(points.back().episode), ylo, yhi);
  std::vector<std::pair<double, double>> raw, ma;
  for (const auto& p : points) {
    raw.emplace_back(static_cast<double>(p.episode), p.reward);
    ma.emplace_back(static_cast<double>(p.episode), p.moving_average);
  }
  c.polyline(raw, "#bbbbbb", 0.6);
  c.polyline(ma, "#1f77b4", 1.8);
  c.axes("episode", "cumulative reward");
  return c.finish();
}

/// One box-and-whisker glyph per labelled sample summary.
inline std::string box_plot_svg(
    const std::vector<std::pair<std::string, stats::SampleSummary>>& groups,
    const std::string& metric_label) {
  if (groups.empty()) throw std::invalid_argument("box plot: no data");
  detail::Canvas c;
  double ylo = groups[0].second.min, yhi = groups[0].second.max;
  for (const auto& [label, s] : groups) {
    ylo = std::min(ylo, s.min);
    yhi = std::max(yhi, s.max);
  }
  c.set_range(0, static_cast<double>(groups.size()), ylo, yhi);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& s = groups[i].second;
    const double mid = i + 0.5, w = 0.22;
    c.line(mid, s.min, mid, s.q1, "black");
    c.line(mid, s.q3, mid, s.max, "black");
    c.line(mid - w, s.min, mid + w, s.min, "black");
    c.line(mid - w, s.max, mid + w, s.max, "black");
    c.rect(mid - w, s.q1, mid + w, s.q3, "#aec7e8", "black");
    c.line(mid - w, s.median, mid + w, s.median, "#d62728", 2.0);
    c.text(c.px(mid), c.height - c.margin + 16, groups[i].first, "middle");
  }
  c.axes("", metric_label);
  return c.finish();
}

/// Arena snapshot: goal disk with its buffered ring, herder diamonds, target
/// circles.
inline std::string trajectory_svg(const std::vector<Marker>& markers, double goal_radius,
                                  double buffered_radius, double half_width) {
  if (markers.empty()) throw std::invalid_argument("trajectory snapshot: no data");
  detail::Canvas c;
  c.width = 480;
  c.height = 480;
  c.set_range(-half_width, half_width, -half_width, half_width);
  const double px_per_unit = (c.width - 2 * c.margin) / (2 * half_width);
  c.circle(0, 0, goal_radius * px_per_unit, "#e8f4e8", "#2ca02c");
  c.circle(0, 0, buffered_radius * px_per_unit, "none", "#2ca02c", "4 3");
  for (const auto& m : markers) {
    if (m.is_herder) {
      const double x = c.px(m.x), y = c.py(m.y), r = 5;
      c.body << "<polygon points=\"" << x << ',' << y - r << ' ' << x + r << ',' << y << ' ' << x
             << ',' << y + r << ' ' << x - r << ',' << y
             << "\" fill=\"#d62728\" stroke=\"black\"/>\n";
    } else {
      c.circle(m.x, m.y, 2.5, "#1f77b4");
    }
  }
  c.axes("x", "y");
  return c.finish();
}

/// Target-radius statistics over time with the containment fraction below.
inline std::string radius_trace_svg(const std::vector<harness::ScaleRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("radius trace: no data");
  detail::Canvas c;
  double yhi = 0;
  for (const auto& r : rows) yhi = std::max(yhi, r.max_radius);
  c.set_range(static_cast<double>(rows.front().step), static_cast<double>(rows.back().step), 0,
              yhi);
  std::vector<std::pair<double, double>> mean, lo, hi, mn, mx, chi_line;
  for (const auto& r : rows) {
    const double s = static_cast<double>(r.step);
    mean.emplace_back(s, r.mean_radius);
    lo.emplace_back(s, std::max(0.0, r.mean_radius - r.std_radius));
    hi.emplace_back(s, r.mean_radius + r.std_radius);
    mn.emplace_back(s, r.min_radius);
    mx.emplace_back(s, r.max_radius);
    chi_line.emplace_back(s, r.chi * yhi);  // chi in [0,1] scaled onto the radius axis
  }
  c.polyline(hi, "#c6dbef", 1.0);
  c.polyline(lo, "#c6dbef", 1.0);
  c.polyline(mean, "#1f77b4", 1.8);
  c.polyline(mn, "#2ca02c", 1.0, "3 3");
  c.polyline(mx, "#d62728", 1.0, "3 3");
  c.polyline(chi_line, "#9467bd", 1.2, "6 2");
  c.axes("step", "target radius (chi dashed, scaled)");
  return c.finish();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << content;
}

}  // namespace shepherd::plot
