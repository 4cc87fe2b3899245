#include "metashift/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "metashift/harness/csv.hpp"

namespace metashift {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(0.5, std::abs(lo) * 0.5);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

void emit_chart_svg(const std::string& path, const ChartSpec& spec,
                    const std::vector<ChartSeries>& series) {
  const double left = 62.0;
  const double right = 18.0;
  const double top = 34.0;
  const double bottom = 48.0;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;

  bool any = false;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  for (const ChartSeries& s : series) {
    if (s.y.size() != s.x.size() ||
        (!s.yerr.empty() && s.yerr.size() != s.y.size()))
      throw std::invalid_argument("emit_chart_svg: ragged series " + s.label);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = s.yerr.empty() ? 0.0 : s.yerr[i];
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = s.y[i] - e;
        ymax = s.y[i] + e;
        any = true;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i] - e);
        ymax = std::max(ymax, s.y[i] + e);
      }
    }
  }
  const Range xr = padded(xmin, xmax);
  const Range yr = padded(ymin, ymax);

  auto sx = [&](double v) {
    return left + (v - xr.lo) / (xr.hi - xr.lo) * pw;
  };
  auto sy = [&](double v) {
    return top + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph;
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_chart_svg: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width
      << ' ' << spec.height << "\">\n";
  out << "<rect width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    out << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"20\" font-family=\"sans-serif\" "
           "font-size=\"14\" text-anchor=\"middle\">" << spec.title << "</text>\n";

  // Axes frame and ticks.
  out << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\""
      << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  const int n_ticks = 5;
  for (int i = 0; i <= n_ticks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / n_ticks;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / n_ticks;
    out << "<line x1=\"" << fmt(sx(fx)) << "\" y1=\"" << fmt(top + ph)
        << "\" x2=\"" << fmt(sx(fx)) << "\" y2=\"" << fmt(top + ph + 4)
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << fmt(sx(fx)) << "\" y=\"" << fmt(top + ph + 16)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
        << fmt_tick(fx) << "</text>\n";
    out << "<line x1=\"" << fmt(left - 4) << "\" y1=\"" << fmt(sy(fy))
        << "\" x2=\"" << fmt(left) << "\" y2=\"" << fmt(sy(fy))
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << fmt(left - 7) << "\" y=\"" << fmt(sy(fy) + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
        << fmt_tick(fy) << "</text>\n";
  }
  if (!spec.x_label.empty())
    out << "<text x=\"" << fmt(left + pw / 2) << "\" y=\""
        << fmt(top + ph + 36)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        << spec.x_label << "</text>\n";
  if (!spec.y_label.empty())
    out << "<text x=\"14\" y=\"" << fmt(top + ph / 2)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 14 " << fmt(top + ph / 2) << ")\">"
        << spec.y_label << "</text>\n";

  // Zero gridline when the y-range spans zero.
  if (yr.lo < 0.0 && yr.hi > 0.0)
    out << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(sy(0.0))
        << "\" x2=\"" << fmt(left + pw) << "\" y2=\"" << fmt(sy(0.0))
        << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

  if (!any) {
    out << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(top + ph / 2)
        << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#777777\" "
           "text-anchor=\"middle\">no data</text>\n";
  }

  int color_idx = 0;
  for (const ChartSeries& s : series) {
    const char* color = kPalette[color_idx % kPaletteSize];
    ++color_idx;
    if (!s.x.empty()) {
      // Points in increasing x order for a stable polyline.
      std::vector<std::size_t> order(s.x.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.6\" points=\"";
      for (std::size_t i : order) out << fmt(sx(s.x[i])) << ',' << fmt(sy(s.y[i])) << ' ';
      out << "\"/>\n";
      for (std::size_t i : order) {
        out << "<circle cx=\"" << fmt(sx(s.x[i])) << "\" cy=\"" << fmt(sy(s.y[i]))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        const double e = s.yerr.empty() ? 0.0 : s.yerr[i];
        if (e > 0.0) {
          out << "<line x1=\"" << fmt(sx(s.x[i])) << "\" y1=\""
              << fmt(sy(s.y[i] - e)) << "\" x2=\"" << fmt(sx(s.x[i]))
              << "\" y2=\"" << fmt(sy(s.y[i] + e)) << "\" stroke=\"" << color
              << "\"/>\n";
          out << "<line x1=\"" << fmt(sx(s.x[i]) - 3) << "\" y1=\""
              << fmt(sy(s.y[i] - e)) << "\" x2=\"" << fmt(sx(s.x[i]) + 3)
              << "\" y2=\"" << fmt(sy(s.y[i] - e)) << "\" stroke=\"" << color
              << "\"/>\n";
          out << "<line x1=\"" << fmt(sx(s.x[i]) - 3) << "\" y1=\""
              << fmt(sy(s.y[i] + e)) << "\" x2=\"" << fmt(sx(s.x[i]) + 3)
              << "\" y2=\"" << fmt(sy(s.y[i] + e)) << "\" stroke=\"" << color
              << "\"/>\n";
        }
      }
    }
  }

  // Legend, series order top to bottom.
  double ly = top + 14.0;
  color_idx = 0;
  for (const ChartSeries& s : series) {
    const char* color = kPalette[color_idx % kPaletteSize];
    ++color_idx;
    out << "<line x1=\"" << fmt(left + pw - 120) << "\" y1=\"" << fmt(ly - 4)
        << "\" x2=\"" << fmt(left + pw - 100) << "\" y2=\"" << fmt(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(left + pw - 94) << "\" y=\"" << fmt(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
        << "</text>\n";
    ly += 16.0;
  }

  out << "</svg>\n";
  if (!out) throw std::runtime_error("emit_chart_svg: write failed: " + path);
}

void emit_chart(const std::string& csv_path, const ChartColumns& columns,
                const ChartSpec& spec, const std::string& out_path) {
  const CsvTable table = read_csv(csv_path);
  const int xc = table.column(columns.x_column);
  const int yc = table.column(columns.y_column);
  if (xc < 0 || yc < 0)
    throw std::invalid_argument("emit_chart: missing column '" +
                                (xc < 0 ? columns.x_column : columns.y_column) +
                                "' in " + csv_path);
  int sc = -1;
  if (!columns.series_column.empty()) {
    sc = table.column(columns.series_column);
    if (sc < 0)
      throw std::invalid_argument("emit_chart: missing column '" +
                                  columns.series_column + "' in " + csv_path);
  }
  if (!columns.seed_column.empty() && table.column(columns.seed_column) < 0)
    throw std::invalid_argument("emit_chart: missing column '" +
                                columns.seed_column + "' in " + csv_path);

  // Collect (series label -> x -> values), series in first-appearance order.
  std::vector<std::string> series_order;
  std::map<std::string, std::map<double, std::vector<double>>> data;
  for (const auto& row : table.rows) {
    const std::string label =
        sc >= 0 ? row[static_cast<std::size_t>(sc)] : columns.y_column;
    if (!data.count(label)) series_order.push_back(label);
    const double x = std::stod(row[static_cast<std::size_t>(xc)]);
    const double y = std::stod(row[static_cast<std::size_t>(yc)]);
    data[label][x].push_back(y);
  }

  std::vector<ChartSeries> series;
  for (const std::string& label : series_order) {
    ChartSeries s;
    s.label = label;
    for (const auto& [x, ys] : data[label]) {
      double mean = 0.0;
      for (double v : ys) mean += v;
      mean /= static_cast<double>(ys.size());
      double err = 0.0;
      if (!columns.seed_column.empty() && ys.size() > 1) {
        double var = 0.0;
        for (double v : ys) var += (v - mean) * (v - mean);
        var /= static_cast<double>(ys.size() - 1);
        err = std::sqrt(var / static_cast<double>(ys.size()));
      }
      s.x.push_back(x);
      s.y.push_back(mean);
      s.yerr.push_back(err);
    }
    series.push_back(std::move(s));
  }
  emit_chart_svg(out_path, spec, series);
}

}  // namespace metashift
