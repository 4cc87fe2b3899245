#pragma once

#include <string>
#include <vector>

namespace metashift {

// Result row schema shared by every selection CSV the harness writes.
struct ResultRow {
  std::string experiment;
  std::string env;
  std::string phase;  // adapt | mid | max (fixed-arm baselines)
  double epsilon = 0.0;
  double test_shift_lo = 0.0;
  double test_shift_hi = 0.0;
  std::uint64_t seed = 0;
  int meta_episode = 0;
  int arm = 0;
  double ret = 0.0;
  double success_rate = 0.0;
  double cumulative_regret = 0.0;
};

inline const char* kResultHeader =
    "experiment,env,phase,epsilon,test_shift_lo,test_shift_hi,seed,"
    "meta_episode,arm,return,success_rate,cumulative_regret";

std::string format_double(double v);  // %.17g, deterministic

void write_result_csv(const std::string& path,
                      const std::vector<ResultRow>& rows);

// Minimal CSV reader for our own outputs: comma-separated, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace metashift
