#pragma once

#include <span>
#include <vector>

#include "metashift/core/distributions.hpp"

namespace metashift {

// Worst-case distribution and its expected regret for a fixed policy.
struct BallWorstCase {
  double value = 0.0;
  std::vector<double> q;
};

// Exact maximizer of E_q[1/pi] over {q : TV(p_d, q) <= epsilon}. The
// objective is linear in q, so the optimum moves mass from the lowest-regret
// goals onto the single highest-regret goal until the budget is spent.
BallWorstCase tv_worst_case_exact(std::span<const double> policy_probs,
                                  const CategoricalTaskDist& p_d,
                                  double epsilon);

// Exact value of max E_q[1/pi] over {q : KL(p_d || q) <= epsilon}, solved
// through the KKT conditions: on the support of p_d the optimal q has
// q_g = lambda p_g / (mu - r_g), with mu found by bisection on the active
// constraint; mass sent outside the support (free except for the
// renormalization cost -log(1-t) <= epsilon) is optimized by golden-section
// search, the slice maximum being concave in t.
double kl_worst_case_value(std::span<const double> policy_probs,
                           const CategoricalTaskDist& p_d, double epsilon);

// Grid-search oracles over the probability simplex at the given resolution.
// All refuse (throw) rather than approximate when n_goals > 6 or the grid
// has too many points. Ties break toward the lexicographically lowest grid
// point, making every oracle deterministic.

// Gridded q inside the TV ball maximizing expected regret of the policy.
CategoricalTaskDist brute_force_worst_case(std::span<const double> policy_probs,
                                           const CategoricalTaskDist& p_d,
                                           double epsilon, double grid_step);

// Gridded policy minimizing expected regret under a fixed distribution.
std::vector<double> brute_force_optimal_policy(const CategoricalTaskDist& dist,
                                               double grid_step);

// Gridded policy minimizing the exact worst case over the TV ball.
std::vector<double> brute_force_robust_policy(const CategoricalTaskDist& p_d,
                                              double epsilon, double grid_step);

// Gridded policy minimizing the exact worst case over the KL ball.
std::vector<double> brute_force_kl_robust_policy(const CategoricalTaskDist& p_d,
                                                 double epsilon,
                                                 double grid_step);

}  // namespace metashift
