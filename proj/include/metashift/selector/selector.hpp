#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "metashift/core/rng.hpp"

namespace metashift {

// Per-arm Beta posteriors, a_i = successes + 1, b_i = failures + 1.
struct BetaBanditState {
  std::vector<double> a;
  std::vector<double> b;

  explicit BetaBanditState(std::size_t n_arms)
      : a(n_arms, 1.0), b(n_arms, 1.0) {}
};

// a[arm] += success_rate, b[arm] += 1 - success_rate. success_rate in [0,1].
void update_beta(BetaBanditState& state, std::size_t arm, double success_rate);

// One pulled arm: the raw meta-episode return and its success rate in [0,1].
struct ArmOutcome {
  double ret = 0.0;
  double success_rate = 0.0;
};

// Runs one meta-episode of the given arm's meta-policy.
using RewardOracle = std::function<ArmOutcome(std::size_t arm, Rng& rng)>;

struct SelectionRecord {
  int meta_episode = 0;
  std::size_t arm = 0;
  double epsilon = 0.0;
  double ret = 0.0;
  double success_rate = 0.0;
};

struct SelectionLog {
  std::vector<SelectionRecord> records;
};

// Which statistic feeds the posterior update: the meta-episode average
// success rate (default) or the return min-max normalized into [0,1].
struct UpdateStatistic {
  enum class Kind { success_rate, normalized_return };
  Kind kind = Kind::success_rate;
  double return_lo = 0.0;
  double return_hi = 1.0;

  double of(const ArmOutcome& o) const;
};

struct ThompsonResult {
  BetaBanditState state;
  SelectionLog log;
  std::vector<long long> pick_counts;
};

// Thompson sampling over Beta posteriors: each round samples
// theta_i ~ Beta(a_i, b_i), plays the argmax (ties to the lowest index), and
// updates that arm's posterior with the observed statistic.
ThompsonResult thompson_run(const std::vector<double>& arm_epsilons,
                            const RewardOracle& oracle, int n_meta_episodes,
                            std::uint64_t seed,
                            const UpdateStatistic& stat = UpdateStatistic{});

struct CEMState {
  double mu_eps = 0.0;
  double sigma_eps = 0.0;
};

struct CEMConfig {
  int iters = 10;
  int per_iter = 25;
  double elite_frac = 0.4;
  double sigma_min = 0.01;
};

struct CEMResult {
  CEMState state;
  SelectionLog log;
};

// Cross-entropy selection: a uniform first round over arms, then each
// iteration fits (mu_eps, sigma_eps) to the epsilons of the top
// elite_frac returns (ties keep the earlier meta-episode) and samples the
// next round's arms by snapping Normal(mu_eps, sigma_eps) draws to the
// nearest grid epsilon. sigma_eps is floored at sigma_min.
CEMResult cem_run(const std::vector<double>& arm_epsilons,
                  const RewardOracle& oracle, const CEMConfig& cfg,
                  std::uint64_t seed);

// Test-time regret N R* - sum_t R_{i_t}, evaluated on the expected returns
// of the pulled arms.
double bandit_regret(const SelectionLog& log,
                     const std::vector<double>& true_means);

}  // namespace metashift
