#include "metashift/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <thread>

#include "metashift/harness/csv.hpp"
#include "metashift/harness/svg.hpp"
#include "metashift/models/checkpoint.hpp"
#include "metashift/selector/selector.hpp"

namespace metashift {

namespace {

// Fixed stream ids carving up the master seed space; documented here so a
// rerun of the same config is reproducible byte for byte.
constexpr std::uint64_t kEvalStream = 1000;      // + distribution index
constexpr std::uint64_t kSelectorStream = 2000;  // + distribution index

struct Phase {
  std::string name;   // adapt | mid | max
  int fixed_arm = -1; // -1 runs the configured selector
};

struct CellStats {
  double last_window_success = 0.0;
  double selected_epsilon = 0.0;  // adapt phase only; else the fixed epsilon
};

struct CellOutput {
  std::vector<ResultRow> rows;
  CellStats stats;
};

ArmOutcome play_arm(const ExperimentConfig& cfg,
                    const std::vector<SearchPolicy>& policies,
                    const TaskSampler& sampler, std::size_t arm, Rng& rng) {
  ArmOutcome out;
  if (cfg.env_kind == "wind_nav") {
    const Vec2 wind = sample_task(sampler, rng);
    const MetaEpisodeResult r =
        run_meta_episode(policies[arm], cfg.wind, wind, rng);
    out.ret = r.mean_return();
    out.success_rate = r.success_rate();
  } else {
    const Vec2 goal = sample_task(sampler, rng);
    const MetaEpisodeResult r =
        run_meta_episode(policies[arm], cfg.point, goal, rng);
    out.ret = r.mean_return();
    out.success_rate = r.success_rate();
  }
  return out;
}

std::vector<double> eval_arm_means(const ExperimentConfig& cfg,
                                   const std::vector<SearchPolicy>& policies,
                                   const TaskSampler& sampler,
                                   std::size_t dist_index) {
  std::vector<double> means(policies.size(), 0.0);
  for (std::size_t arm = 0; arm < policies.size(); ++arm) {
    Rng rng = Rng(cfg.trainer.seed, kEvalStream + dist_index).split(arm);
    double acc = 0.0;
    for (int e = 0; e < cfg.eval_episodes; ++e)
      acc += play_arm(cfg, policies, sampler, arm, rng).ret;
    means[arm] = acc / static_cast<double>(cfg.eval_episodes);
  }
  return means;
}

CellOutput run_cell(const ExperimentConfig& cfg,
                    const std::vector<SearchPolicy>& policies,
                    const std::vector<double>& arm_epsilons,
                    const TestBand& band, std::size_t dist_index,
                    std::uint64_t seed, const Phase& phase,
                    const std::vector<double>& true_means) {
  const double r_star = *std::max_element(true_means.begin(), true_means.end());
  CellOutput out;

  SelectionLog log;
  if (phase.fixed_arm < 0) {
    RewardOracle oracle = [&](std::size_t arm, Rng& rng) {
      return play_arm(cfg, policies, band.sampler, arm, rng);
    };
    const std::uint64_t run_seed =
        Rng(seed, kSelectorStream + dist_index).next_u64();
    if (cfg.selector_kind == "cem") {
      log = cem_run(arm_epsilons, oracle, cfg.cem, run_seed).log;
    } else {
      log = thompson_run(arm_epsilons, oracle, cfg.meta_episodes, run_seed,
                         cfg.statistic)
                .log;
    }
  } else {
    Rng rng(seed, kSelectorStream + dist_index);
    rng = rng.split(static_cast<std::uint64_t>(phase.fixed_arm) + 1);
    const std::size_t arm = static_cast<std::size_t>(phase.fixed_arm);
    for (int t = 0; t < cfg.meta_episodes; ++t) {
      const ArmOutcome o = play_arm(cfg, policies, band.sampler, arm, rng);
      log.records.push_back({t, arm, arm_epsilons[arm], o.ret, o.success_rate});
    }
  }

  double cum_regret = 0.0;
  for (const SelectionRecord& rec : log.records) {
    cum_regret += r_star - true_means[rec.arm];
    ResultRow row;
    row.experiment = cfg.name;
    row.env = cfg.env_kind;
    row.phase = phase.name;
    row.epsilon = rec.epsilon;
    row.test_shift_lo = band.shift_lo;
    row.test_shift_hi = band.shift_hi;
    row.seed = seed;
    row.meta_episode = rec.meta_episode;
    row.arm = static_cast<int>(rec.arm);
    row.ret = rec.ret;
    row.success_rate = rec.success_rate;
    row.cumulative_regret = cum_regret;
    out.rows.push_back(std::move(row));
  }

  // Last-window statistics: mean success rate, and for the adaptive phase
  // the most-picked arm over the window (ties toward the lower epsilon).
  const std::size_t n = log.records.size();
  const std::size_t window =
      std::min<std::size_t>(n, static_cast<std::size_t>(cfg.last_window));
  double success = 0.0;
  std::vector<int> picks(arm_epsilons.size(), 0);
  for (std::size_t i = n - window; i < n; ++i) {
    success += log.records[i].success_rate;
    ++picks[log.records[i].arm];
  }
  out.stats.last_window_success = window > 0 ? success / window : 0.0;
  const std::size_t top_arm = static_cast<std::size_t>(
      std::max_element(picks.begin(), picks.end()) - picks.begin());
  out.stats.selected_epsilon = arm_epsilons[top_arm];
  return out;
}

double lower_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace

void save_population(const std::string& path, const RobustPopulation& pop) {
  std::vector<NamedArray> arrays;
  std::vector<double> eps;
  for (const PopulationEntry& e : pop.entries) eps.push_back(e.epsilon);
  arrays.push_back({"epsilons", eps});
  for (std::size_t i = 0; i < pop.entries.size(); ++i) {
    const PopulationEntry& e = pop.entries[i];
    const std::string p = "level." + std::to_string(i) + ".";
    arrays.push_back({p + "policy_logits", e.policy.logits()});
    if (!e.adversary_logw.empty())
      arrays.push_back({p + "adversary_logw", e.adversary_logw});
    if (!e.adversary_mean.empty()) {
      arrays.push_back({p + "adversary_mean", e.adversary_mean});
      arrays.push_back({p + "adversary_logstd", e.adversary_logstd});
    }
    arrays.push_back({p + "duals", {e.lambda, e.lambda_lower}});
    arrays.push_back({p + "state",
                      {e.final_kl, e.kl_converged ? 1.0 : 0.0,
                       e.aborted ? 1.0 : 0.0, e.acceptance_rate}});
  }
  save_checkpoint(path, arrays);
}

RobustPopulation load_population(const std::string& path) {
  const std::vector<NamedArray> arrays = load_checkpoint(path);
  const std::vector<double>& eps = find_array(arrays, "epsilons");
  RobustPopulation pop;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const std::string p = "level." + std::to_string(i) + ".";
    PopulationEntry e;
    e.epsilon = eps[i];
    e.policy = SearchPolicy(find_array(arrays, p + "policy_logits"));
    for (const NamedArray& a : arrays) {
      if (a.name == p + "adversary_logw") e.adversary_logw = a.values;
      if (a.name == p + "adversary_mean") e.adversary_mean = a.values;
      if (a.name == p + "adversary_logstd") e.adversary_logstd = a.values;
    }
    const std::vector<double>& duals = find_array(arrays, p + "duals");
    e.lambda = duals.at(0);
    e.lambda_lower = duals.at(1);
    const std::vector<double>& state = find_array(arrays, p + "state");
    e.final_kl = state.at(0);
    e.kl_converged = state.at(1) != 0.0;
    e.aborted = state.at(2) != 0.0;
    e.acceptance_rate = state.at(3);
    pop.entries.push_back(std::move(e));
  }
  return pop;
}

void write_train_log_csv(const std::string& path,
                         const std::vector<TrainLogRow>& log) {
  std::vector<std::string> lines;
  lines.push_back("iteration,epsilon,objective,kl,lambda,acceptance_rate");
  for (const TrainLogRow& r : log) {
    lines.push_back(std::to_string(r.iteration) + "," +
                    format_double(r.epsilon) + "," +
                    format_double(r.objective) + "," + format_double(r.kl) +
                    "," + format_double(r.lambda) + "," +
                    format_double(r.acceptance_rate));
  }
  write_lines(path, lines);
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  ExperimentOutcome outcome;
  outcome.results_csv = cfg.out_dir + "/results.csv";
  outcome.summary_csv = cfg.out_dir + "/summary.csv";
  outcome.chart_svg = cfg.out_dir + "/success_vs_shift.svg";
  outcome.train_log_csv = cfg.out_dir + "/train_log.csv";
  outcome.population_path = cfg.out_dir + "/population.ckpt";

  const PolarGrid& grid =
      cfg.env_kind == "wind_nav" ? cfg.wind.grid : cfg.point.grid;
  const CategoricalTaskDist p_train =
      discretize_on_grid(cfg.train_sampler, grid, cfg.smoothing);

  RobustPopulation pop;
  if (!cfg.population_path.empty()) {
    pop = load_population(cfg.population_path);
    outcome.population_path = cfg.population_path;
  } else {
    pop = train_robust_population(p_train, cfg.grid, cfg.trainer);
    save_population(outcome.population_path, pop);
    write_train_log_csv(outcome.train_log_csv, pop.log);
  }
  outcome.numerical_failure = pop.has_failure();

  std::vector<SearchPolicy> policies;
  std::vector<double> arm_epsilons;
  for (const PopulationEntry& e : pop.entries) {
    policies.push_back(e.policy);
    arm_epsilons.push_back(e.epsilon);
  }

  std::vector<Phase> phases;
  phases.push_back({"adapt", -1});
  for (const std::string& b : cfg.baselines) {
    if (b == "mid")
      phases.push_back({"mid", static_cast<int>(arm_epsilons.size() / 2)});
    else
      phases.push_back({"max", static_cast<int>(arm_epsilons.size() - 1)});
  }

  // Expected per-arm returns per distribution, for regret accounting.
  std::vector<std::vector<double>> true_means;
  for (std::size_t d = 0; d < cfg.tests.size(); ++d)
    true_means.push_back(
        eval_arm_means(cfg, policies, cfg.tests[d].sampler, d));

  // Cells in merge order: (distribution, seed, phase).
  struct CellKey {
    std::size_t dist;
    std::size_t seed_idx;
    std::size_t phase_idx;
  };
  std::vector<CellKey> cells;
  for (std::size_t d = 0; d < cfg.tests.size(); ++d)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
      for (std::size_t p = 0; p < phases.size(); ++p) cells.push_back({d, s, p});

  std::vector<CellOutput> outputs(cells.size());
  auto work = [&](std::size_t cell_idx) {
    const CellKey& key = cells[cell_idx];
    outputs[cell_idx] =
        run_cell(cfg, policies, arm_epsilons, cfg.tests[key.dist], key.dist,
                 cfg.seeds[key.seed_idx], phases[key.phase_idx],
                 true_means[key.dist]);
  };
  if (cfg.threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n_workers =
        std::min<int>(cfg.threads, static_cast<int>(cells.size()));
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          work(i);
        }
      });
    }
    for (std::thread& t : workers) t.join();
  }

  std::vector<ResultRow> rows;
  for (const CellOutput& c : outputs)
    rows.insert(rows.end(), c.rows.begin(), c.rows.end());
  write_result_csv(outcome.results_csv, rows);

  // Per (distribution, phase) aggregates over seeds.
  std::vector<std::string> summary;
  summary.push_back(
      "experiment,env,phase,test_shift_lo,test_shift_hi,n_seeds,"
      "success_mean,success_stderr,selected_epsilon_median");
  std::vector<ChartSeries> chart(phases.size());
  for (std::size_t p = 0; p < phases.size(); ++p) chart[p].label = phases[p].name;

  for (std::size_t d = 0; d < cfg.tests.size(); ++d) {
    for (std::size_t p = 0; p < phases.size(); ++p) {
      std::vector<double> succ;
      std::vector<double> sel;
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        const std::size_t idx =
            (d * cfg.seeds.size() + s) * phases.size() + p;
        succ.push_back(outputs[idx].stats.last_window_success);
        sel.push_back(outputs[idx].stats.selected_epsilon);
      }
      double mean = 0.0;
      for (double v : succ) mean += v;
      mean /= static_cast<double>(succ.size());
      double err = 0.0;
      if (succ.size() > 1) {
        double var = 0.0;
        for (double v : succ) var += (v - mean) * (v - mean);
        var /= static_cast<double>(succ.size() - 1);
        err = std::sqrt(var / static_cast<double>(succ.size()));
      }
      summary.push_back(cfg.name + "," + cfg.env_kind + "," + phases[p].name +
                        "," + format_double(cfg.tests[d].shift_lo) + "," +
                        format_double(cfg.tests[d].shift_hi) + "," +
                        std::to_string(cfg.seeds.size()) + "," +
                        format_double(mean) + "," + format_double(err) + "," +
                        format_double(lower_median(sel)));
      chart[p].x.push_back(cfg.tests[d].shift_hi);
      chart[p].y.push_back(mean);
      chart[p].yerr.push_back(err);
    }
  }
  write_lines(outcome.summary_csv, summary);

  ChartSpec spec;
  spec.title = cfg.name;
  spec.x_label = "test shift (band upper edge)";
  spec.y_label = "success rate, mean over seeds";
  emit_chart_svg(outcome.chart_svg, spec, chart);

  return outcome;
}

}  // namespace metashift
