#pragma once

#include <span>
#include <vector>

#include "metashift/core/distributions.hpp"
#include "metashift/core/search_policy.hpp"

namespace metashift {

// Expected regret of a policy under a task distribution, together with the
// per-goal decomposition. expected_regret == sum_g q(g) * per_goal[g]; both
// are +infinity when the distribution places mass on a goal the policy
// never visits.
struct RegretReport {
  double expected_regret = 0.0;
  std::vector<double> per_goal_regret;
};

// Regret of a search policy on the task of reaching one goal: 1 / pi(goal).
// Returns +infinity when pi(goal) == 0 (closed-form policies only; softmax
// policies always have full support). Throws on an out-of-range index.
double task_regret(std::span<const double> policy_probs, std::size_t goal);
double task_regret(const SearchPolicy& policy, std::size_t goal);

RegretReport expected_regret(std::span<const double> policy_probs,
                             const CategoricalTaskDist& dist);
RegretReport expected_regret(const SearchPolicy& policy,
                             const CategoricalTaskDist& dist);

}  // namespace metashift
