#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "metashift/core/distributions.hpp"
#include "metashift/harness/env.hpp"
#include "metashift/harness/sampler.hpp"
#include "metashift/selector/selector.hpp"
#include "metashift/trainer/trainer.hpp"

namespace metashift {

// Config file problems map to CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// UTF-8 text config:
//   - blank lines and lines starting with '#' are ignored
//   - '[section]' opens a section (word characters, '.', '_', '-')
//   - 'key = value' inside a section; values are whitespace-separated words
//   - duplicate sections merge; duplicate keys are errors
// Every key must be consumed by the loader; unknown keys are errors.
class IniFile {
 public:
  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& text, const std::string& origin);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_double(const std::string& section, const std::string& key,
                    double fallback);
  int get_int(const std::string& section, const std::string& key, int fallback);
  std::uint64_t get_uint64(const std::string& section, const std::string& key,
                           std::uint64_t fallback);
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback);
  std::vector<std::string> get_words(const std::string& section,
                                     const std::string& key,
                                     const std::vector<std::string>& fallback);

  // Throws ConfigError listing every key that was never read.
  void throw_on_unconsumed() const;

 private:
  std::string raw(const std::string& section, const std::string& key);
  std::map<std::string, std::map<std::string, std::string>> values_;
  std::set<std::string> consumed_;  // "section.key"
  std::string origin_;
};

struct TestBand {
  TaskSampler sampler;
  double shift_lo = 0.0;  // reported in CSV; exponential laws use [0, inf)
  double shift_hi = 0.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "out";
  int threads = 1;
  int last_window = 50;

  std::string env_kind = "point_nav";  // point_nav | wind_nav
  PointNavEnv point;
  WindNavEnv wind;

  TaskSampler train_sampler;
  double smoothing = 0.02;
  std::vector<TestBand> tests;

  EpsilonGrid grid{std::vector<double>{0.0}};
  TrainerConfig trainer;

  std::string selector_kind = "thompson";  // thompson | cem
  int meta_episodes = 250;
  UpdateStatistic statistic;
  std::vector<std::string> baselines;  // subset of {"mid", "max"}
  int eval_episodes = 400;
  CEMConfig cem;
  std::string population_path;  // when set, load instead of training

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_ini(IniFile& ini);

  std::size_t n_cells() const {
    return env_kind == "wind_nav" ? wind.grid.n_cells() : point.grid.n_cells();
  }
};

RadialLaw parse_radial_law(const std::vector<std::string>& words,
                           const std::string& context);

}  // namespace metashift
