#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "metashift/core/distributions.hpp"
#include "metashift/core/divergences.hpp"
#include "metashift/core/rng.hpp"
#include "metashift/core/search_policy.hpp"

namespace metashift {

enum class GradMode { exact, score_function };

// Per-task return models for a tabular search policy.
//   neg_inverse:    return(g) = -1/pi(g), the analytic regret family.
//   search_success: return(g) = expected mean episode return of the k-episode
//                   search process (resample a goal cell each episode until
//                   the true cell is hit, then revisit).
enum class ReturnModel { neg_inverse, search_success };

struct TrainerConfig {
  double epsilon = 0.0;
  double step_policy = 0.3;
  double step_adversary = 0.1;
  double step_dual = 0.5;
  int iterations = 1;
  int batch_tasks = 8;
  int episodes_per_meta = 2;  // k, used by the search_success model
  std::uint64_t seed = 0;
  GradMode mode = GradMode::exact;
  ReturnModel return_model = ReturnModel::neg_inverse;
  double kl_tolerance = 0.02;
  int convergence_window = 100;
  bool warm_start = false;
  double baseline_decay = 0.9;
  double grad_clip = 0.0;  // L2 clip on parameter gradients; 0 disables
  double sigma_floor = 1e-4;
  int log_every = 1;
};

struct DualState {
  double lambda = 0.0;
};

// lambda <- max(0, lambda + step_dual * (kl - epsilon)).
DualState dual_step(const DualState& state, double kl, const TrainerConfig& cfg);

// Scalar moving-average baseline for score-function estimators.
struct Baseline {
  double value = 0.0;
  bool primed = false;
  void update(double r, double decay);
};

// --- return model closed forms -------------------------------------------

// P(goal found within k episodes) = 1 - (1 - pi)^k.
double search_found_prob(double pi_g, int k);
// Expected mean of the k episode returns, (1/k) sum_i (1 - (1-pi)^i).
double search_success_mean(double pi_g, int k);
double search_success_mean_deriv(double pi_g, int k);

double task_return(const TrainerConfig& cfg, double pi_g);
double task_return_deriv(const TrainerConfig& cfg, double pi_g);

// One k-episode search process on a fixed true cell. npos (== n_goals) marks
// an unreachable goal. Exploration cells are recorded for score-function
// gradients.
struct SearchOutcome {
  std::vector<double> episode_returns;
  bool success = false;
  std::optional<int> found_episode;
  std::vector<std::size_t> sampled_cells;
  double mean_return() const;
};
SearchOutcome simulate_search(const SearchPolicy& policy, std::size_t true_cell,
                              int k, Rng& rng);

// --- objectives and steps --------------------------------------------------

// E_q[return] under the configured return model.
double policy_objective(const SearchPolicy& policy,
                        const CategoricalTaskDist& q, const TrainerConfig& cfg);

// Exact gradient of the policy objective with respect to the logits.
std::vector<double> policy_objective_grad(const SearchPolicy& policy,
                                          const CategoricalTaskDist& q,
                                          const TrainerConfig& cfg);

// One ascent step on E_q[return]. Exact mode differentiates the closed form;
// score mode runs batch_tasks simulated meta-episodes and applies REINFORCE
// with the moving baseline (rng and baseline are then required).
SearchPolicy meta_policy_step(const SearchPolicy& policy,
                              const CategoricalTaskDist& adversary_dist,
                              const TrainerConfig& cfg, Rng* rng = nullptr,
                              Baseline* baseline = nullptr);

// Adversarial task distribution over a finite task set, parameterized as
// q(g) proportional to base(g) * exp(logw(g)) (log-space reweighting, so
// weights stay positive and uniform bases recover w_i / sum w_j).
struct CategoricalAdversary {
  CategoricalTaskDist base;
  std::vector<double> logw;

  explicit CategoricalAdversary(CategoricalTaskDist base_dist);
  CategoricalTaskDist dist() const;
  std::vector<double> weights() const;
};

// Exact gradient of E_q[return] + lambda * KL(base || q) in logw.
std::vector<double> adversary_objective_grad(const CategoricalAdversary& adv,
                                             const SearchPolicy& policy,
                                             double lambda,
                                             const TrainerConfig& cfg);

// One descent step on E_q[return] + lambda * KL(base || q). Score mode draws
// batch_tasks tasks from q and uses the score-function estimator for the
// return term; the KL term's gradient is always exact.
void adversary_step(CategoricalAdversary& adv, const SearchPolicy& policy,
                    double lambda, const TrainerConfig& cfg, Rng* rng = nullptr,
                    Baseline* baseline = nullptr);

// --- population training ----------------------------------------------------

struct TrainLogRow {
  int iteration = 0;
  double epsilon = 0.0;
  double objective = 0.0;
  double kl = 0.0;
  double lambda = 0.0;
  double lambda_lower = 0.0;
  double acceptance_rate = 1.0;
};

struct PopulationEntry {
  double epsilon = 0.0;
  SearchPolicy policy{std::vector<double>{0.0}};
  std::vector<double> adversary_logw;     // categorical parameterization
  std::vector<double> adversary_mean;     // latent parameterization
  std::vector<double> adversary_logstd;
  double lambda = 0.0;
  double lambda_lower = 0.0;
  double final_kl = 0.0;
  bool kl_converged = true;
  bool aborted = false;
  double acceptance_rate = 1.0;
};

struct RobustPopulation {
  std::vector<PopulationEntry> entries;
  std::vector<TrainLogRow> log;
  bool has_failure() const;
};

// Alternating optimization per grid level: policy ascent, adversary descent,
// dual update, in that order. The first level (epsilon = 0) trains on the
// training distribution alone. Each level derives an independent RNG stream
// from (cfg.seed, level index) and, unless warm_start is set, starts from a
// fresh uniform policy and fresh adversary.
RobustPopulation train_robust_population(const CategoricalTaskDist& p_train,
                                         const EpsilonGrid& grid,
                                         const TrainerConfig& cfg);

// KKT condition at reported convergence: the constraint is either slack with
// a (near) zero multiplier or active with a positive one.
bool kkt_satisfied(double kl, double lambda, double epsilon, double tol);

// --- disjoint-support variant (latent parameterization) --------------------

// Latent task space: adversaries are diagonal Gaussians over R^dim with the
// standard normal prior as the training distribution; goal_of decodes a
// latent draw to a goal cell for the tabular policy.
struct LatentTaskSpace {
  int latent_dim = 0;
  std::size_t n_goals = 0;
  std::function<std::size_t(const std::vector<double>&)> goal_of;
};

// Population with pairwise-banded KL: level i enforces
// epsilon_{i-1} <= KL(prior || q) <= epsilon_i through two multipliers, and
// draws adversary proposals by rejection against the previous level's final
// adversary density (accept iff log q_prev(z) <= beta_rs). beta_rs of
// +infinity disables rejection; a window-average acceptance rate below 1e-3
// aborts the level with a diagnostic flag.
RobustPopulation train_disjoint_support(const LatentTaskSpace& space,
                                        const EpsilonGrid& grid,
                                        const TrainerConfig& cfg,
                                        double beta_rs);

}  // namespace metashift
