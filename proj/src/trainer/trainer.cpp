#include "metashift/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace metashift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void clip_inplace(std::vector<double>& g, double max_norm) {
  if (max_norm <= 0.0) return;
  double norm2 = 0.0;
  for (double v : g) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& v : g) v *= scale;
  }
}

// Recentered logits keep softmax numerics tame over long runs without
// changing the distribution.
SearchPolicy apply_logit_step(const SearchPolicy& policy,
                              const std::vector<double>& grad, double step) {
  std::vector<double> logits = policy.logits();
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += step * grad[i];
  const double mean =
      std::accumulate(logits.begin(), logits.end(), 0.0) /
      static_cast<double>(logits.size());
  for (double& l : logits) l -= mean;
  return SearchPolicy(std::move(logits));
}

}  // namespace

DualState dual_step(const DualState& state, double kl, const TrainerConfig& cfg) {
  if (!(kl >= 0.0)) throw std::invalid_argument("dual_step: kl must be >= 0");
  DualState out;
  out.lambda = std::max(0.0, state.lambda + cfg.step_dual * (kl - cfg.epsilon));
  return out;
}

void Baseline::update(double r, double decay) {
  if (!primed) {
    value = r;
    primed = true;
  } else {
    value = decay * value + (1.0 - decay) * r;
  }
}

double search_found_prob(double pi_g, int k) {
  return 1.0 - std::pow(1.0 - pi_g, k);
}

double search_success_mean(double pi_g, int k) {
  double acc = 0.0;
  for (int i = 1; i <= k; ++i) acc += 1.0 - std::pow(1.0 - pi_g, i);
  return acc / static_cast<double>(k);
}

double search_success_mean_deriv(double pi_g, int k) {
  double acc = 0.0;
  for (int i = 1; i <= k; ++i) acc += i * std::pow(1.0 - pi_g, i - 1);
  return acc / static_cast<double>(k);
}

double task_return(const TrainerConfig& cfg, double pi_g) {
  if (cfg.return_model == ReturnModel::neg_inverse) {
    return pi_g > 0.0 ? -1.0 / pi_g : -kInf;
  }
  return search_success_mean(pi_g, cfg.episodes_per_meta);
}

double task_return_deriv(const TrainerConfig& cfg, double pi_g) {
  if (cfg.return_model == ReturnModel::neg_inverse) {
    return pi_g > 0.0 ? 1.0 / (pi_g * pi_g) : kInf;
  }
  return search_success_mean_deriv(pi_g, cfg.episodes_per_meta);
}

double SearchOutcome::mean_return() const {
  if (episode_returns.empty()) return 0.0;
  return std::accumulate(episode_returns.begin(), episode_returns.end(), 0.0) /
         static_cast<double>(episode_returns.size());
}

SearchOutcome simulate_search(const SearchPolicy& policy, std::size_t true_cell,
                              int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("simulate_search: k must be >= 1");
  SearchOutcome out;
  out.episode_returns.resize(static_cast<std::size_t>(k), 0.0);
  const CategoricalTaskDist pi =
      CategoricalTaskDist::normalized(policy.probs());
  for (int ep = 0; ep < k; ++ep) {
    if (out.success) {
      out.episode_returns[static_cast<std::size_t>(ep)] = 1.0;
      continue;
    }
    const std::size_t cell = pi.sample(rng);
    out.sampled_cells.push_back(cell);
    if (cell == true_cell) {
      out.success = true;
      out.found_episode = ep;
      out.episode_returns[static_cast<std::size_t>(ep)] = 1.0;
    }
  }
  return out;
}

double policy_objective(const SearchPolicy& policy,
                        const CategoricalTaskDist& q, const TrainerConfig& cfg) {
  if (policy.n_goals() != q.size())
    throw std::invalid_argument("policy_objective: length mismatch");
  double acc = 0.0;
  for (std::size_t g = 0; g < q.size(); ++g) {
    if (q[g] > 0.0) acc += q[g] * task_return(cfg, policy.probs()[g]);
  }
  return acc;
}

std::vector<double> policy_objective_grad(const SearchPolicy& policy,
                                          const CategoricalTaskDist& q,
                                          const TrainerConfig& cfg) {
  if (policy.n_goals() != q.size())
    throw std::invalid_argument("policy_objective_grad: length mismatch");
  const std::vector<double>& pi = policy.probs();
  const std::size_t n = pi.size();
  // dJ/dtheta_i = pi_i (v_i - sum_g pi_g v_g), v_g = q_g * return'(pi_g)
  std::vector<double> v(n, 0.0);
  double inner = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    v[g] = q[g] * task_return_deriv(cfg, pi[g]);
    inner += pi[g] * v[g];
  }
  std::vector<double> grad(n);
  for (std::size_t i = 0; i < n; ++i) grad[i] = pi[i] * (v[i] - inner);
  return grad;
}

SearchPolicy meta_policy_step(const SearchPolicy& policy,
                              const CategoricalTaskDist& adversary_dist,
                              const TrainerConfig& cfg, Rng* rng,
                              Baseline* baseline) {
  if (cfg.mode == GradMode::exact) {
    std::vector<double> grad = policy_objective_grad(policy, adversary_dist, cfg);
    clip_inplace(grad, cfg.grad_clip);
    return apply_logit_step(policy, grad, cfg.step_policy);
  }

  if (rng == nullptr || baseline == nullptr)
    throw std::invalid_argument(
        "meta_policy_step: score mode needs rng and baseline");
  const std::vector<double>& pi = policy.probs();
  const std::size_t n = pi.size();
  std::vector<double> grad(n, 0.0);
  double batch_return = 0.0;
  for (int b = 0; b < cfg.batch_tasks; ++b) {
    const std::size_t g = adversary_dist.sample(*rng);
    const SearchOutcome outcome =
        simulate_search(policy, g, cfg.episodes_per_meta, *rng);
    const double r = outcome.mean_return();
    batch_return += r;
    const double adv = r - baseline->value;
    for (const std::size_t cell : outcome.sampled_cells) {
      // grad log pi(cell) in logits: e_cell - pi
      for (std::size_t i = 0; i < n; ++i)
        grad[i] += adv * ((i == cell ? 1.0 : 0.0) - pi[i]);
    }
  }
  for (double& v : grad) v /= static_cast<double>(cfg.batch_tasks);
  baseline->update(batch_return / static_cast<double>(cfg.batch_tasks),
                   cfg.baseline_decay);
  clip_inplace(grad, cfg.grad_clip);
  return apply_logit_step(policy, grad, cfg.step_policy);
}

CategoricalAdversary::CategoricalAdversary(CategoricalTaskDist base_dist)
    : base(std::move(base_dist)), logw(base.size(), 0.0) {}

CategoricalTaskDist CategoricalAdversary::dist() const {
  const std::size_t n = base.size();
  const double max_l = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = base[i] * std::exp(logw[i] - max_l);
  return CategoricalTaskDist::normalized(std::move(w));
}

std::vector<double> CategoricalAdversary::weights() const {
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logw[i]);
  return w;
}

std::vector<double> adversary_objective_grad(const CategoricalAdversary& adv,
                                             const SearchPolicy& policy,
                                             double lambda,
                                             const TrainerConfig& cfg) {
  const CategoricalTaskDist q = adv.dist();
  const std::size_t n = q.size();
  if (policy.n_goals() != n)
    throw std::invalid_argument("adversary_objective_grad: length mismatch");

  std::vector<double> r(n, 0.0);
  double e_q = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    r[g] = task_return(cfg, policy.probs()[g]);
    e_q += q[g] * r[g];
  }
  // d/dlogw_i E_q[R] = q_i (R_i - E_q[R]);  d/dlogw_i KL(base || q) = q_i - base_i
  std::vector<double> grad(n);
  for (std::size_t i = 0; i < n; ++i)
    grad[i] = q[i] * (r[i] - e_q) + lambda * (q[i] - adv.base[i]);
  return grad;
}

void adversary_step(CategoricalAdversary& adv, const SearchPolicy& policy,
                    double lambda, const TrainerConfig& cfg, Rng* rng,
                    Baseline* baseline) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("adversary_step: lambda must be >= 0");
  const std::size_t n = adv.base.size();
  if (n == 1) return;  // single task: no degrees of freedom

  std::vector<double> grad;
  if (cfg.mode == GradMode::exact) {
    grad = adversary_objective_grad(adv, policy, lambda, cfg);
  } else {
    if (rng == nullptr || baseline == nullptr)
      throw std::invalid_argument(
          "adversary_step: score mode needs rng and baseline");
    const CategoricalTaskDist q = adv.dist();
    grad.assign(n, 0.0);
    double batch_return = 0.0;
    for (int b = 0; b < cfg.batch_tasks; ++b) {
      const std::size_t g = q.sample(*rng);
      double r = 0.0;
      if (cfg.return_model == ReturnModel::neg_inverse) {
        r = task_return(cfg, policy.probs()[g]);
      } else {
        r = simulate_search(policy, g, cfg.episodes_per_meta, *rng).mean_return();
      }
      batch_return += r;
      const double adv_r = r - baseline->value;
      for (std::size_t i = 0; i < n; ++i)
        grad[i] += adv_r * ((i == g ? 1.0 : 0.0) - q[i]);
    }
    for (double& v : grad) v /= static_cast<double>(cfg.batch_tasks);
    baseline->update(batch_return / static_cast<double>(cfg.batch_tasks),
                     cfg.baseline_decay);
    for (std::size_t i = 0; i < n; ++i) grad[i] += lambda * (q[i] - adv.base[i]);
  }

  clip_inplace(grad, cfg.grad_clip);
  double mean_step = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    adv.logw[i] -= cfg.step_adversary * grad[i];
    mean_step += adv.logw[i];
  }
  mean_step /= static_cast<double>(n);
  for (double& l : adv.logw) l -= mean_step;
}

bool RobustPopulation::has_failure() const {
  for (const PopulationEntry& e : entries)
    if (!e.kl_converged || e.aborted) return true;
  return false;
}

bool kkt_satisfied(double kl, double lambda, double epsilon, double tol) {
  const bool slack = kl <= epsilon + tol && lambda <= tol;
  const bool active = std::abs(kl - epsilon) <= tol && lambda > 0.0;
  return slack || active;
}

RobustPopulation train_robust_population(const CategoricalTaskDist& p_train,
                                         const EpsilonGrid& grid,
                                         const TrainerConfig& cfg) {
  RobustPopulation pop;

  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    TrainerConfig level_cfg = cfg;
    level_cfg.epsilon = grid[idx];
    Rng rng(cfg.seed, idx);
    Baseline policy_baseline;
    Baseline adversary_baseline;

    SearchPolicy policy =
        (cfg.warm_start && idx > 0) ? pop.entries.back().policy
                                    : SearchPolicy::uniform(p_train.size());
    CategoricalAdversary adversary(p_train);
    DualState dual;
    double kl = 0.0;

    for (int it = 0; it < cfg.iterations; ++it) {
      const CategoricalTaskDist q =
          idx == 0 ? p_train : adversary.dist();
      policy = meta_policy_step(policy, q, level_cfg, &rng, &policy_baseline);
      if (idx > 0) {
        adversary_step(adversary, policy, dual.lambda, level_cfg, &rng,
                       &adversary_baseline);
        kl = kl_categorical(p_train, adversary.dist());
        dual = dual_step(dual, kl, level_cfg);
      }
      if (it % cfg.log_every == 0 || it + 1 == cfg.iterations) {
        TrainLogRow row;
        row.iteration = it;
        row.epsilon = grid[idx];
        row.objective = policy_objective(policy, q, level_cfg);
        row.kl = kl;
        row.lambda = dual.lambda;
        pop.log.push_back(row);
      }
    }

    PopulationEntry entry;
    entry.epsilon = grid[idx];
    entry.policy = policy;
    entry.adversary_logw = adversary.logw;
    entry.lambda = dual.lambda;
    entry.final_kl = idx == 0 ? 0.0 : kl_categorical(p_train, adversary.dist());
    entry.kl_converged = entry.final_kl <= grid[idx] + cfg.kl_tolerance;
    pop.entries.push_back(std::move(entry));
  }
  return pop;
}

namespace {

// Diagonal Gaussian adversary in latent space with the standard normal prior.
struct GaussianAdversary {
  std::vector<double> mean;
  std::vector<double> logstd;

  explicit GaussianAdversary(int dim)
      : mean(static_cast<std::size_t>(dim), 0.0),
        logstd(static_cast<std::size_t>(dim), 0.0) {}

  DiagonalGaussian dist(double sigma_floor) const {
    std::vector<double> sd(logstd.size());
    for (std::size_t j = 0; j < sd.size(); ++j)
      sd[j] = std::max(std::exp(logstd[j]), sigma_floor);
    return DiagonalGaussian(mean, sd);
  }
};

}  // namespace

RobustPopulation train_disjoint_support(const LatentTaskSpace& space,
                                        const EpsilonGrid& grid,
                                        const TrainerConfig& cfg,
                                        double beta_rs) {
  if (grid.size() < 2)
    throw std::invalid_argument("train_disjoint_support: grid needs >= 2 levels");
  if (space.latent_dim < 1 || space.n_goals < 1 || !space.goal_of)
    throw std::invalid_argument("train_disjoint_support: bad task space");

  RobustPopulation pop;
  const DiagonalGaussian prior =
      DiagonalGaussian::standard(static_cast<std::size_t>(space.latent_dim));
  DiagonalGaussian previous_adversary = prior;

  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    TrainerConfig level_cfg = cfg;
    level_cfg.epsilon = grid[idx];
    const double eps_lower = idx == 0 ? 0.0 : grid[idx - 1];
    Rng rng(cfg.seed, idx);
    Baseline adv_baseline;

    SearchPolicy policy = (cfg.warm_start && idx > 0)
                              ? pop.entries.back().policy
                              : SearchPolicy::uniform(space.n_goals);
    GaussianAdversary adversary(space.latent_dim);
    double lambda_upper = 0.0;
    double lambda_lower = 0.0;
    double kl = 0.0;
    bool aborted = false;

    // Rolling acceptance statistics over the convergence window.
    long long window_proposed = 0;
    long long window_accepted = 0;
    long long total_proposed = 0;
    long long total_accepted = 0;

    auto draw_task = [&](Rng& r, std::vector<double>& z_out) -> bool {
      const DiagonalGaussian q = adversary.dist(cfg.sigma_floor);
      for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<double> z = q.sample(r);
        ++window_proposed;
        ++total_proposed;
        bool accept = true;
        if (idx > 0 && beta_rs != kInf) {
          if (beta_rs == -kInf) accept = false;
          else accept = previous_adversary.log_density(z) <= beta_rs;
        }
        if (accept) {
          ++window_accepted;
          ++total_accepted;
          z_out = std::move(z);
          return true;
        }
      }
      return false;
    };

    for (int it = 0; it < cfg.iterations && !aborted; ++it) {
      // Policy step against the empirical cell distribution of accepted draws.
      std::vector<double> cell_counts(space.n_goals, 0.0);
      std::vector<std::vector<double>> zs;
      for (int b = 0; b < cfg.batch_tasks; ++b) {
        std::vector<double> z;
        if (!draw_task(rng, z)) break;
        cell_counts[space.goal_of(z)] += 1.0;
        zs.push_back(std::move(z));
      }

      if (it >= cfg.convergence_window && window_proposed > 0) {
        const double rate = static_cast<double>(window_accepted) /
                            static_cast<double>(window_proposed);
        if (rate < 1e-3) {
          aborted = true;
          break;
        }
        window_proposed = 0;
        window_accepted = 0;
      }
      if (zs.empty()) {
        aborted = true;
        break;
      }

      const CategoricalTaskDist q_cells =
          CategoricalTaskDist::normalized(std::move(cell_counts));
      TrainerConfig policy_cfg = level_cfg;
      policy_cfg.mode = GradMode::exact;
      policy = meta_policy_step(policy, q_cells, policy_cfg);

      if (idx > 0) {
        // Score-function adversary step on (mean, logstd), two-sided dual.
        const DiagonalGaussian q = adversary.dist(cfg.sigma_floor);
        const std::size_t d = static_cast<std::size_t>(space.latent_dim);
        std::vector<double> g_mean(d, 0.0);
        std::vector<double> g_logstd(d, 0.0);
        double batch_return = 0.0;
        for (const std::vector<double>& z : zs) {
          const double r =
              task_return(level_cfg, policy.probs()[space.goal_of(z)]);
          batch_return += r;
          const double adv_r = r - adv_baseline.value;
          for (std::size_t j = 0; j < d; ++j) {
            const double sd = q.stddev()[j];
            const double u = (z[j] - q.mean()[j]) / sd;
            g_mean[j] += adv_r * u / sd;
            g_logstd[j] += adv_r * (u * u - 1.0);
          }
        }
        const double inv = 1.0 / static_cast<double>(zs.size());
        adv_baseline.update(batch_return * inv, cfg.baseline_decay);

        const double lam = lambda_upper - lambda_lower;
        for (std::size_t j = 0; j < d; ++j) {
          const double sd = q.stddev()[j];
          const double mu = q.mean()[j];
          // KL(N(0,I) || N(mu, sd)) per-coordinate gradients
          const double dkl_dmu = mu / (sd * sd);
          const double dkl_dlogstd = 1.0 - (1.0 + mu * mu) / (sd * sd);
          g_mean[j] = g_mean[j] * inv + lam * dkl_dmu;
          g_logstd[j] = g_logstd[j] * inv + lam * dkl_dlogstd;
        }
        clip_inplace(g_mean, cfg.grad_clip);
        clip_inplace(g_logstd, cfg.grad_clip);
        const double log_floor = std::log(cfg.sigma_floor);
        for (std::size_t j = 0; j < d; ++j) {
          adversary.mean[j] -= cfg.step_adversary * g_mean[j];
          adversary.logstd[j] =
              std::max(log_floor,
                       adversary.logstd[j] - cfg.step_adversary * g_logstd[j]);
        }

        kl = kl_gaussians(prior, adversary.dist(cfg.sigma_floor));
        lambda_upper =
            std::max(0.0, lambda_upper + cfg.step_dual * (kl - grid[idx]));
        lambda_lower =
            std::max(0.0, lambda_lower + cfg.step_dual * (eps_lower - kl));
      }

      if (it % cfg.log_every == 0 || it + 1 == cfg.iterations) {
        TrainLogRow row;
        row.iteration = it;
        row.epsilon = grid[idx];
        row.objective = policy_objective(policy, q_cells, level_cfg);
        row.kl = kl;
        row.lambda = lambda_upper;
        row.lambda_lower = lambda_lower;
        row.acceptance_rate =
            total_proposed > 0 ? static_cast<double>(total_accepted) /
                                     static_cast<double>(total_proposed)
                               : 1.0;
        pop.log.push_back(row);
      }
    }

    PopulationEntry entry;
    entry.epsilon = grid[idx];
    entry.policy = policy;
    entry.adversary_mean = adversary.mean;
    entry.adversary_logstd = adversary.logstd;
    entry.lambda = lambda_upper;
    entry.lambda_lower = lambda_lower;
    entry.final_kl =
        idx == 0 ? 0.0 : kl_gaussians(prior, adversary.dist(cfg.sigma_floor));
    entry.aborted = aborted;
    entry.kl_converged =
        !aborted && entry.final_kl <= grid[idx] + cfg.kl_tolerance &&
        entry.final_kl >= eps_lower - cfg.kl_tolerance;
    entry.acceptance_rate =
        total_proposed > 0 ? static_cast<double>(total_accepted) /
                                 static_cast<double>(total_proposed)
                           : 1.0;
    pop.entries.push_back(std::move(entry));
    // Level 0 never updates its adversary, so this hands the prior to level 1.
    previous_adversary = adversary.dist(cfg.sigma_floor);
  }
  return pop;
}

}  // namespace metashift
