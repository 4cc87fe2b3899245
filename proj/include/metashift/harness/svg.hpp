#pragma once

#include <string>
#include <vector>

namespace metashift {

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;  // optional; empty or same length as y
};

struct ChartSpec {
  int width = 720;
  int height = 480;
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Self-contained deterministic SVG line chart: fixed layout, fixed palette,
// polyline per series with optional error bars, legend in series order. An
// empty dataset still yields valid axes plus a "no data" label; a y-range
// spanning zero always gets a zero gridline.
void emit_chart_svg(const std::string& path, const ChartSpec& spec,
                    const std::vector<ChartSeries>& series);

// CSV-driven variant: picks x/y columns, one series per distinct value of
// series_column (in first-appearance order), and, when seed_column is
// non-empty, aggregates to mean with standard-error bars over seeds.
// Missing columns are errors.
struct ChartColumns {
  std::string x_column;
  std::string y_column;
  std::string series_column;  // optional
  std::string seed_column;    // optional
};

void emit_chart(const std::string& csv_path, const ChartColumns& columns,
                const ChartSpec& spec, const std::string& out_path);

}  // namespace metashift
