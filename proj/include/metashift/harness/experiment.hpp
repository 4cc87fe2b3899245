#pragma once

#include <string>

#include "metashift/harness/config.hpp"
#include "metashift/trainer/trainer.hpp"

namespace metashift {

struct ExperimentOutcome {
  std::string results_csv;
  std::string summary_csv;
  std::string chart_svg;
  std::string train_log_csv;
  std::string population_path;
  bool numerical_failure = false;
};

// End-to-end sweep: discretize the training distribution, train (or load)
// the epsilon population, run the configured selector plus any fixed-arm
// baselines for every (test distribution, seed) cell, and write the result
// CSV, a per-distribution summary CSV and an SVG chart. Outputs are a
// deterministic function of (config, seeds); cells may execute on
// cfg.threads workers and are merged in (distribution, seed, phase) order.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

// Population (de)serialization in the shared checkpoint container.
void save_population(const std::string& path, const RobustPopulation& pop);
RobustPopulation load_population(const std::string& path);

void write_train_log_csv(const std::string& path,
                         const std::vector<TrainLogRow>& log);

}  // namespace metashift
