#pragma once

#include <string>
#include <vector>

namespace metashift {

// Named flat parameter arrays in a plain-text container:
//
//   MSCKPT 1
//   array <name> <count>
//   <value>            (one per line, printf %.17g, exact double round-trip)
//   ...
//   end
//
// Names must be non-empty and contain no whitespace. Writing the same
// arrays always produces identical bytes.
struct NamedArray {
  std::string name;
  std::vector<double> values;
};

void save_checkpoint(const std::string& path,
                     const std::vector<NamedArray>& arrays);

std::vector<NamedArray> load_checkpoint(const std::string& path);

// Lookup helper; throws when the name is missing.
const std::vector<double>& find_array(const std::vector<NamedArray>& arrays,
                                      const std::string& name);

}  // namespace metashift
