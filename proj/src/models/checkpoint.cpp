#include "metashift/models/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace metashift {

namespace {
constexpr const char* kMagic = "MSCKPT";
constexpr int kVersion = 1;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << kMagic << ' ' << kVersion << '\n';
  for (const NamedArray& a : arrays) {
    if (a.name.empty() || a.name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("save_checkpoint: bad array name");
    out << "array " << a.name << ' ' << a.values.size() << '\n';
    for (double v : a.values) out << format_double(v) << '\n';
  }
  out << "end\n";
  if (!out) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

std::vector<NamedArray> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic || version != kVersion)
    throw std::runtime_error("load_checkpoint: bad header in " + path);

  std::vector<NamedArray> arrays;
  std::string tok;
  while (in >> tok) {
    if (tok == "end") return arrays;
    if (tok != "array")
      throw std::runtime_error("load_checkpoint: unexpected token '" + tok + "'");
    NamedArray a;
    std::size_t count = 0;
    if (!(in >> a.name >> count))
      throw std::runtime_error("load_checkpoint: truncated array header");
    a.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> a.values[i]))
        throw std::runtime_error("load_checkpoint: truncated array " + a.name);
    }
    arrays.push_back(std::move(a));
  }
  throw std::runtime_error("load_checkpoint: missing end marker in " + path);
}

const std::vector<double>& find_array(const std::vector<NamedArray>& arrays,
                                      const std::string& name) {
  for (const NamedArray& a : arrays)
    if (a.name == name) return a.values;
  throw std::runtime_error("checkpoint: missing array " + name);
}

}  // namespace metashift
