// Command-line front end: analytic tables, population training, test-time
// selection, end-to-end sweeps and CSV-to-SVG charts.
//
// Exit codes: 0 success, 2 config error, 3 a numerical-failure flag was set
// in the results (training did not converge or a selector aborted).

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "metashift/analytic/brute_force.hpp"
#include "metashift/analytic/closed_forms.hpp"
#include "metashift/analytic/regret.hpp"
#include "metashift/core/divergences.hpp"
#include "metashift/harness/config.hpp"
#include "metashift/harness/csv.hpp"
#include "metashift/harness/experiment.hpp"
#include "metashift/harness/svg.hpp"

namespace {

using namespace metashift;

int cmd_analytic(int goals, int core, double beta,
                 const std::vector<double>& eps1s,
                 const std::vector<double>& eps2s, double grid_step,
                 const std::string& out_path) {
  const GoalSpace space(goals, core);
  std::vector<std::string> lines;
  std::string header =
      "n_goals,n_core,beta,eps1,eps2,ebar1,ebar2,excess_formula,excess_direct,"
      "regret_pi1_on_q1,regret_pi2_on_q1";
  if (grid_step > 0.0) header += ",bf_worst_case_regret,shift_regret";
  lines.push_back(header);

  const CategoricalTaskDist p_d = make_concentrated(space, beta);
  for (double e1 : eps1s) {
    for (double e2 : eps2s) {
      const RobustSetup setup1(space, beta, e1);
      const RobustSetup setup2(space, beta, e2);
      const std::vector<double> pi1 = robust_policy(setup1);
      const std::vector<double> pi2 = robust_policy(setup2);
      const CategoricalTaskDist q1 = worst_case_shift(pi1, p_d, e1, core);
      const double r11 = expected_regret(pi1, q1).expected_regret;
      const double r21 = expected_regret(pi2, q1).expected_regret;
      const ExcessRegret ex = excess_regret(e1, e2, space, beta);
      std::string line =
          std::to_string(goals) + "," + std::to_string(core) + "," +
          format_double(beta) + "," + format_double(e1) + "," +
          format_double(e2) + "," + format_double(epsilon_bar(setup1)) + "," +
          format_double(epsilon_bar(setup2)) + "," + format_double(ex.value) +
          "," + format_double(r21 - r11) + "," + format_double(r11) + "," +
          format_double(r21);
      if (grid_step > 0.0) {
        const CategoricalTaskDist bf =
            brute_force_worst_case(pi1, p_d, e1, grid_step);
        line += "," + format_double(expected_regret(pi1, bf).expected_regret);
        line += "," + format_double(r11);
      }
      lines.push_back(std::move(line));
    }
  }
  if (out_path.empty()) {
    for (const std::string& l : lines) std::cout << l << '\n';
  } else {
    write_lines(out_path, lines);
  }
  return 0;
}

ExperimentConfig load_config(const std::string& path, std::uint64_t seed_override,
                             bool has_seed, const std::string& out_override) {
  ExperimentConfig cfg = ExperimentConfig::from_file(path);
  if (has_seed) cfg.trainer.seed = seed_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale laboratory for robust meta-policy populations"};
  app.require_subcommand(1);
  app.fallthrough();  // global --config/--seed/--out may follow the subcommand

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool has_seed = false;
  app.add_option("--config", config_path, "experiment config file")
      ->envname("METASHIFT_CONFIG");
  app.add_option("--out", out_override, "override output directory");
  app.add_option("--seed", seed_override, "override trainer seed")
      ->each([&](const std::string&) { has_seed = true; });

  // analytic
  auto* analytic = app.add_subcommand(
      "analytic", "closed-form robustness tables and oracle checks");
  int goals = 10;
  int core = 2;
  double beta = 0.05;
  std::vector<double> eps1s{0.2};
  std::vector<double> eps2s{0.0};
  double grid_step = 0.0;
  std::string analytic_out;
  analytic->add_option("--goals", goals, "goal count |S|");
  analytic->add_option("--core", core, "core goal count |S0|");
  analytic->add_option("--beta", beta, "training concentration");
  analytic->add_option("--eps1", eps1s, "true shift levels");
  analytic->add_option("--eps2", eps2s, "trained robustness levels");
  analytic->add_option("--grid-step", grid_step,
                       "also run the grid worst-case oracle (n_goals <= 6)");
  analytic->add_option("--table-out", analytic_out, "CSV path (default stdout)");

  // train / select / sweep
  auto* train = app.add_subcommand("train", "train an epsilon population");
  auto* select = app.add_subcommand(
      "select", "run the test-time selector on a saved population");
  std::string population_path;
  select->add_option("--population", population_path,
                     "population checkpoint (defaults to config value)");
  auto* sweep = app.add_subcommand("sweep", "end-to-end experiment sweep");

  // chart
  auto* chart = app.add_subcommand("chart", "render a CSV as an SVG chart");
  std::string chart_in;
  std::string chart_out = "chart.svg";
  ChartColumns columns;
  ChartSpec spec;
  chart->add_option("--in", chart_in, "input CSV")->required();
  chart->add_option("--chart-out", chart_out, "output SVG path");
  chart->add_option("--x", columns.x_column, "x column")->required();
  chart->add_option("--y", columns.y_column, "y column")->required();
  chart->add_option("--series", columns.series_column, "series column");
  chart->add_option("--seeds", columns.seed_column,
                    "aggregate mean/stderr over this column");
  chart->add_option("--title", spec.title, "chart title");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analytic->parsed())
      return cmd_analytic(goals, core, beta, eps1s, eps2s, grid_step,
                          analytic_out);

    if (chart->parsed()) {
      spec.x_label = columns.x_column;
      spec.y_label = columns.y_column;
      emit_chart(chart_in, columns, spec, chart_out);
      return 0;
    }

    if (config_path.empty())
      throw ConfigError("this subcommand requires --config");
    ExperimentConfig cfg =
        load_config(config_path, seed_override, has_seed, out_override);

    if (train->parsed()) {
      const PolarGrid& grid =
          cfg.env_kind == "wind_nav" ? cfg.wind.grid : cfg.point.grid;
      const CategoricalTaskDist p_train =
          discretize_on_grid(cfg.train_sampler, grid, cfg.smoothing);
      const RobustPopulation pop =
          train_robust_population(p_train, cfg.grid, cfg.trainer);
      std::filesystem::create_directories(cfg.out_dir);
      save_population(cfg.out_dir + "/population.ckpt", pop);
      write_train_log_csv(cfg.out_dir + "/train_log.csv", pop.log);
      std::cout << "population: " << cfg.out_dir << "/population.ckpt\n";
      return pop.has_failure() ? 3 : 0;
    }

    if (select->parsed()) {
      if (!population_path.empty()) cfg.population_path = population_path;
      if (cfg.population_path.empty())
        throw ConfigError("select: no population given (flag or config)");
      const ExperimentOutcome out = run_experiment(cfg);
      std::cout << "results: " << out.results_csv << '\n';
      return out.numerical_failure ? 3 : 0;
    }

    if (sweep->parsed()) {
      const ExperimentOutcome out = run_experiment(cfg);
      std::cout << "results: " << out.results_csv << '\n'
                << "summary: " << out.summary_csv << '\n'
                << "chart:   " << out.chart_svg << '\n';
      return out.numerical_failure ? 3 : 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
