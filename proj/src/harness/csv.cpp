#include "metashift/harness/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace metashift {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_result_csv(const std::string& path,
                      const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_result_csv: cannot open " + path);
  out << kResultHeader << '\n';
  for (const ResultRow& r : rows) {
    out << r.experiment << ',' << r.env << ',' << r.phase << ','
        << format_double(r.epsilon) << ',' << format_double(r.test_shift_lo)
        << ',' << format_double(r.test_shift_hi) << ',' << r.seed << ','
        << r.meta_episode << ',' << r.arm << ',' << format_double(r.ret) << ','
        << format_double(r.success_rate) << ','
        << format_double(r.cumulative_regret) << '\n';
  }
  if (!out) throw std::runtime_error("write_result_csv: write failed: " + path);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.empty()) continue;
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_lines: cannot open " + path);
  for (const std::string& l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("write_lines: write failed: " + path);
}

}  // namespace metashift
