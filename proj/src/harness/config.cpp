#include "metashift/harness/config.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

namespace metashift {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
          c == '-'))
      return false;
  }
  return true;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

IniFile IniFile::parse_string(const std::string& text, const std::string& origin) {
  IniFile ini;
  ini.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where =
        origin + ":" + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(where + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!valid_name(section))
        throw ConfigError(where + ": bad section name '" + section + "'");
      ini.values_[section];  // sections may be empty
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value'");
    if (section.empty())
      throw ConfigError(where + ": key outside any [section]");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!valid_name(key)) throw ConfigError(where + ": bad key '" + key + "'");
    auto& sec = ini.values_[section];
    if (sec.count(key))
      throw ConfigError(where + ": duplicate key '" + key + "'");
    sec[key] = value;
  }
  return ini;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  const auto sec = values_.find(section);
  return sec != values_.end() && sec->second.count(key) > 0;
}

std::string IniFile::raw(const std::string& section, const std::string& key) {
  consumed_.insert(section + "." + key);
  return values_.at(section).at(key);
}

std::string IniFile::get_string(const std::string& section,
                                const std::string& key,
                                const std::string& fallback) {
  if (!has(section, key)) return fallback;
  return raw(section, key);
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) {
  if (!has(section, key)) return fallback;
  const std::string v = raw(section, key);
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": " + section + "." + key +
                      " is not a number: '" + v + "'");
  }
}

int IniFile::get_int(const std::string& section, const std::string& key,
                     int fallback) {
  const double v = get_double(section, key, static_cast<double>(fallback));
  const int out = static_cast<int>(v);
  if (static_cast<double>(out) != v)
    throw ConfigError(origin_ + ": " + section + "." + key +
                      " must be an integer");
  return out;
}

std::uint64_t IniFile::get_uint64(const std::string& section,
                                  const std::string& key,
                                  std::uint64_t fallback) {
  if (!has(section, key)) return fallback;
  const std::string v = raw(section, key);
  try {
    std::size_t pos = 0;
    const unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": " + section + "." + key +
                      " is not an unsigned integer: '" + v + "'");
  }
}

bool IniFile::get_bool(const std::string& section, const std::string& key,
                       bool fallback) {
  if (!has(section, key)) return fallback;
  const std::string v = raw(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(origin_ + ": " + section + "." + key +
                    " must be a boolean, got '" + v + "'");
}

std::vector<std::string> IniFile::get_words(
    const std::string& section, const std::string& key,
    const std::vector<std::string>& fallback) {
  if (!has(section, key)) return fallback;
  return split_words(raw(section, key));
}

void IniFile::throw_on_unconsumed() const {
  std::vector<std::string> unknown;
  for (const auto& [section, keys] : values_) {
    for (const auto& [key, value] : keys) {
      if (!consumed_.count(section + "." + key))
        unknown.push_back(section + "." + key);
    }
  }
  if (!unknown.empty()) {
    std::string msg = origin_ + ": unknown config keys:";
    for (const std::string& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
}

RadialLaw parse_radial_law(const std::vector<std::string>& words,
                           const std::string& context) {
  auto num = [&](const std::string& w) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(w, &pos);
      if (pos != w.size()) throw std::invalid_argument(w);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(context + ": expected a number, got '" + w + "'");
    }
  };
  if (words.size() == 3 && words[0] == "uniform")
    return RadialLaw::uniform_law(num(words[1]), num(words[2]));
  if (words.size() == 2 && words[0] == "exponential")
    return RadialLaw::exponential_law(num(words[1]));
  throw ConfigError(context +
                    ": expected 'uniform <lo> <hi>' or 'exponential <rate>'");
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  IniFile ini = IniFile::parse_file(path);
  return from_ini(ini);
}

ExperimentConfig ExperimentConfig::from_ini(IniFile& ini) {
  ExperimentConfig cfg;

  cfg.name = ini.get_string("experiment", "name", cfg.name);
  cfg.out_dir = ini.get_string("experiment", "out", cfg.out_dir);
  cfg.threads = ini.get_int("experiment", "threads", cfg.threads);
  cfg.last_window = ini.get_int("experiment", "last_window", cfg.last_window);
  {
    std::vector<std::string> words =
        ini.get_words("experiment", "seeds", {"0"});
    if (words.empty()) throw ConfigError("experiment.seeds: need >= 1 seed");
    cfg.seeds.clear();
    for (const std::string& w : words) {
      try {
        cfg.seeds.push_back(std::stoull(w));
      } catch (const std::exception&) {
        throw ConfigError("experiment.seeds: bad seed '" + w + "'");
      }
    }
  }
  if (cfg.threads < 1) throw ConfigError("experiment.threads must be >= 1");
  if (cfg.last_window < 1) throw ConfigError("experiment.last_window must be >= 1");

  cfg.env_kind = ini.get_string("env", "kind", cfg.env_kind);
  if (cfg.env_kind != "point_nav" && cfg.env_kind != "wind_nav")
    throw ConfigError("env.kind must be point_nav or wind_nav");

  const int n_radii = ini.get_int("goal_grid", "n_radii", 8);
  const int n_angles = ini.get_int("goal_grid", "n_angles", 16);
  const double r_max_default = cfg.env_kind == "wind_nav" ? 0.1 : 0.8;
  const double r_max = ini.get_double("goal_grid", "r_max", r_max_default);
  PolarGrid grid(n_radii, n_angles, r_max);

  if (cfg.env_kind == "point_nav") {
    cfg.point.delta = ini.get_double("env", "delta", cfg.point.delta);
    cfg.point.horizon = ini.get_int("env", "horizon", cfg.point.horizon);
    cfg.point.k = ini.get_int("env", "k", cfg.point.k);
    cfg.point.arena = ini.get_double("env", "arena", cfg.point.arena);
    cfg.point.dense = ini.get_bool("env", "dense", cfg.point.dense);
    cfg.point.grid = grid;
    cfg.trainer.episodes_per_meta = cfg.point.k;
  } else {
    cfg.wind.delta = ini.get_double("env", "delta", cfg.wind.delta);
    cfg.wind.horizon = ini.get_int("env", "horizon", cfg.wind.horizon);
    cfg.wind.k = ini.get_int("env", "k", cfg.wind.k);
    cfg.wind.arena = ini.get_double("env", "arena", cfg.wind.arena);
    cfg.wind.dt = ini.get_double("env", "dt", cfg.wind.dt);
    cfg.wind.action_bound =
        ini.get_double("env", "action_bound", cfg.wind.action_bound);
    cfg.wind.grid = grid;
    cfg.trainer.episodes_per_meta = cfg.wind.k;
  }

  cfg.train_sampler.radial = parse_radial_law(
      ini.get_words("train_dist", "radial", {"uniform", "0.0", "0.5"}),
      "train_dist.radial");
  cfg.smoothing = ini.get_double("train_dist", "smoothing", cfg.smoothing);

  const int n_tests = ini.get_int("tests", "count", 0);
  if (n_tests < 0) throw ConfigError("tests.count must be >= 0");
  for (int i = 1; i <= n_tests; ++i) {
    const std::string key = "test" + std::to_string(i);
    if (!ini.has("tests", key))
      throw ConfigError("tests." + key + " missing (tests.count = " +
                        std::to_string(n_tests) + ")");
    TestBand band;
    band.sampler.radial =
        parse_radial_law(ini.get_words("tests", key, {}), "tests." + key);
    if (band.sampler.radial.kind == RadialLaw::Kind::uniform) {
      band.shift_lo = band.sampler.radial.lo;
      band.shift_hi = band.sampler.radial.hi;
    } else {
      band.shift_lo = 0.0;
      band.shift_hi = std::numeric_limits<double>::infinity();
    }
    cfg.tests.push_back(band);
  }
  if (cfg.tests.empty()) {
    TestBand band;
    band.sampler = cfg.train_sampler;
    if (band.sampler.radial.kind == RadialLaw::Kind::uniform) {
      band.shift_lo = band.sampler.radial.lo;
      band.shift_hi = band.sampler.radial.hi;
    } else {
      band.shift_hi = std::numeric_limits<double>::infinity();
    }
    cfg.tests.push_back(band);
  }

  {
    std::vector<std::string> words =
        ini.get_words("grid", "levels", {"0.0", "0.1", "0.2"});
    std::vector<double> levels;
    for (const std::string& w : words) {
      try {
        levels.push_back(std::stod(w));
      } catch (const std::exception&) {
        throw ConfigError("grid.levels: bad level '" + w + "'");
      }
    }
    try {
      cfg.grid = EpsilonGrid(std::move(levels));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("grid.levels: ") + e.what());
    }
  }

  cfg.trainer.iterations = ini.get_int("trainer", "iterations", 3000);
  cfg.trainer.step_policy =
      ini.get_double("trainer", "step_policy", cfg.trainer.step_policy);
  cfg.trainer.step_adversary =
      ini.get_double("trainer", "step_adversary", cfg.trainer.step_adversary);
  cfg.trainer.step_dual =
      ini.get_double("trainer", "step_dual", cfg.trainer.step_dual);
  cfg.trainer.batch_tasks =
      ini.get_int("trainer", "batch_tasks", cfg.trainer.batch_tasks);
  cfg.trainer.kl_tolerance =
      ini.get_double("trainer", "kl_tolerance", cfg.trainer.kl_tolerance);
  cfg.trainer.seed = ini.get_uint64("trainer", "seed", 1);
  cfg.trainer.log_every = ini.get_int("trainer", "log_every", 50);
  cfg.trainer.warm_start =
      ini.get_bool("trainer", "warm_start", cfg.trainer.warm_start);
  cfg.trainer.grad_clip =
      ini.get_double("trainer", "grad_clip", cfg.trainer.grad_clip);
  {
    const std::string mode = ini.get_string("trainer", "mode", "exact");
    if (mode == "exact") cfg.trainer.mode = GradMode::exact;
    else if (mode == "score") cfg.trainer.mode = GradMode::score_function;
    else throw ConfigError("trainer.mode must be exact or score");
    const std::string rm = ini.get_string("trainer", "return_model", "search");
    if (rm == "search") cfg.trainer.return_model = ReturnModel::search_success;
    else if (rm == "neg_inverse") cfg.trainer.return_model = ReturnModel::neg_inverse;
    else throw ConfigError("trainer.return_model must be search or neg_inverse");
  }

  cfg.selector_kind = ini.get_string("selector", "kind", cfg.selector_kind);
  if (cfg.selector_kind != "thompson" && cfg.selector_kind != "cem")
    throw ConfigError("selector.kind must be thompson or cem");
  cfg.meta_episodes = ini.get_int("selector", "meta_episodes", cfg.meta_episodes);
  if (cfg.meta_episodes < 1)
    throw ConfigError("selector.meta_episodes must be >= 1");
  {
    const std::string stat = ini.get_string("selector", "statistic", "success");
    if (stat == "success") {
      cfg.statistic.kind = UpdateStatistic::Kind::success_rate;
    } else if (stat == "return") {
      cfg.statistic.kind = UpdateStatistic::Kind::normalized_return;
      cfg.statistic.return_lo = ini.get_double("selector", "return_lo", 0.0);
      cfg.statistic.return_hi = ini.get_double("selector", "return_hi", 1.0);
      if (!(cfg.statistic.return_hi > cfg.statistic.return_lo))
        throw ConfigError("selector.return_hi must exceed selector.return_lo");
    } else {
      throw ConfigError("selector.statistic must be success or return");
    }
  }
  cfg.baselines = ini.get_words("selector", "baselines", {});
  for (const std::string& b : cfg.baselines) {
    if (b != "mid" && b != "max")
      throw ConfigError("selector.baselines entries must be mid or max");
  }
  cfg.eval_episodes = ini.get_int("selector", "eval_episodes", cfg.eval_episodes);
  cfg.cem.iters = ini.get_int("selector", "cem_iters", cfg.cem.iters);
  cfg.cem.per_iter = ini.get_int("selector", "cem_per_iter", cfg.cem.per_iter);
  cfg.cem.elite_frac =
      ini.get_double("selector", "cem_elite_frac", cfg.cem.elite_frac);
  cfg.cem.sigma_min =
      ini.get_double("selector", "cem_sigma_min", cfg.cem.sigma_min);
  cfg.population_path = ini.get_string("experiment", "population", "");

  ini.throw_on_unconsumed();
  return cfg;
}

}  // namespace metashift
