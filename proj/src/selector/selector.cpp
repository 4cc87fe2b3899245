#include "metashift/selector/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace metashift {

void update_beta(BetaBanditState& state, std::size_t arm, double success_rate) {
  if (arm >= state.a.size())
    throw std::out_of_range("update_beta: arm index out of range");
  if (!(success_rate >= 0.0 && success_rate <= 1.0))
    throw std::invalid_argument("update_beta: success_rate outside [0,1]");
  state.a[arm] += success_rate;
  state.b[arm] += 1.0 - success_rate;
}

double UpdateStatistic::of(const ArmOutcome& o) const {
  if (kind == Kind::success_rate) return o.success_rate;
  if (!(return_hi > return_lo))
    throw std::invalid_argument("UpdateStatistic: need return_hi > return_lo");
  return std::clamp((o.ret - return_lo) / (return_hi - return_lo), 0.0, 1.0);
}

ThompsonResult thompson_run(const std::vector<double>& arm_epsilons,
                            const RewardOracle& oracle, int n_meta_episodes,
                            std::uint64_t seed, const UpdateStatistic& stat) {
  const std::size_t m = arm_epsilons.size();
  if (m == 0) throw std::invalid_argument("thompson_run: no arms");
  if (n_meta_episodes < 1)
    throw std::invalid_argument("thompson_run: need at least one meta-episode");

  ThompsonResult result{BetaBanditState(m), SelectionLog{},
                        std::vector<long long>(m, 0)};
  Rng sampler(seed, 0);
  Rng episodes(seed, 1);

  for (int t = 0; t < n_meta_episodes; ++t) {
    std::size_t arm = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double theta = sampler.beta(result.state.a[i], result.state.b[i]);
      if (theta > best) {
        best = theta;
        arm = i;
      }
    }
    const ArmOutcome outcome = oracle(arm, episodes);
    update_beta(result.state, arm, stat.of(outcome));
    ++result.pick_counts[arm];
    result.log.records.push_back(
        {t, arm, arm_epsilons[arm], outcome.ret, outcome.success_rate});
  }
  return result;
}

namespace {

// Elite mean/std of the chosen epsilons; equal returns keep the earlier
// meta-episode.
CEMState fit_elites(const std::vector<SelectionRecord>& round, double elite_frac,
                    double sigma_min) {
  std::vector<std::size_t> order(round.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return round[x].ret > round[y].ret;
  });
  const std::size_t n_elite = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(elite_frac * round.size())));

  double mean = 0.0;
  for (std::size_t i = 0; i < n_elite; ++i) mean += round[order[i]].epsilon;
  mean /= static_cast<double>(n_elite);
  double var = 0.0;
  for (std::size_t i = 0; i < n_elite; ++i) {
    const double d = round[order[i]].epsilon - mean;
    var += d * d;
  }
  var /= static_cast<double>(n_elite);
  return {mean, std::max(std::sqrt(var), sigma_min)};
}

}  // namespace

CEMResult cem_run(const std::vector<double>& arm_epsilons,
                  const RewardOracle& oracle, const CEMConfig& cfg,
                  std::uint64_t seed) {
  const std::size_t m = arm_epsilons.size();
  if (m == 0) throw std::invalid_argument("cem_run: no arms");
  if (cfg.iters < 1 || cfg.per_iter < 1)
    throw std::invalid_argument("cem_run: bad iteration counts");
  if (!(cfg.elite_frac * cfg.per_iter >= 1.0))
    throw std::invalid_argument("cem_run: elite set would be empty");

  CEMResult result;
  Rng arms_rng(seed, 0);
  Rng episodes(seed, 1);
  int episode = 0;

  auto nearest_arm = [&](double eps) {
    std::size_t best = 0;
    double best_d = std::abs(eps - arm_epsilons[0]);
    for (std::size_t i = 1; i < m; ++i) {
      const double d = std::abs(eps - arm_epsilons[i]);
      if (d < best_d) {
        best = i;
        best_d = d;
      }
    }
    return best;
  };

  std::vector<SelectionRecord> round;
  for (int it = 0; it < cfg.iters; ++it) {
    round.clear();
    for (int n = 0; n < cfg.per_iter; ++n) {
      std::size_t arm = 0;
      if (it == 0) {
        arm = arms_rng.uniform_index(m);
      } else {
        const double eps = result.state.mu_eps +
                           result.state.sigma_eps * arms_rng.normal();
        arm = nearest_arm(eps);
      }
      const ArmOutcome outcome = oracle(arm, episodes);
      const SelectionRecord rec{episode++, arm, arm_epsilons[arm], outcome.ret,
                                outcome.success_rate};
      round.push_back(rec);
      result.log.records.push_back(rec);
    }
    result.state = fit_elites(round, cfg.elite_frac, cfg.sigma_min);
  }
  return result;
}

double bandit_regret(const SelectionLog& log,
                     const std::vector<double>& true_means) {
  if (true_means.empty())
    throw std::invalid_argument("bandit_regret: no arms");
  const double r_star = *std::max_element(true_means.begin(), true_means.end());
  double regret = 0.0;
  for (const SelectionRecord& rec : log.records) {
    if (rec.arm >= true_means.size())
      throw std::invalid_argument("bandit_regret: arm outside true_means");
    regret += r_star - true_means[rec.arm];
  }
  return regret;
}

}  // namespace metashift
