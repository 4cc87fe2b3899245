#include "metashift/analytic/regret.hpp"

#include <limits>
#include <stdexcept>

namespace metashift {

double task_regret(std::span<const double> policy_probs, std::size_t goal) {
  if (goal >= policy_probs.size())
    throw std::out_of_range("task_regret: goal index out of range");
  const double p = policy_probs[goal];
  if (p <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / p;
}

double task_regret(const SearchPolicy& policy, std::size_t goal) {
  return task_regret(std::span<const double>(policy.probs()), goal);
}

RegretReport expected_regret(std::span<const double> policy_probs,
                             const CategoricalTaskDist& dist) {
  if (policy_probs.size() != dist.size())
    throw std::invalid_argument("expected_regret: length mismatch");
  RegretReport report;
  report.per_goal_regret.resize(dist.size());
  double acc = 0.0;
  bool infinite = false;
  for (std::size_t g = 0; g < dist.size(); ++g) {
    const double r = task_regret(policy_probs, g);
    report.per_goal_regret[g] = r;
    if (dist[g] > 0.0) {
      if (r == std::numeric_limits<double>::infinity()) infinite = true;
      else acc += dist[g] * r;
    }
  }
  report.expected_regret =
      infinite ? std::numeric_limits<double>::infinity() : acc;
  return report;
}

RegretReport expected_regret(const SearchPolicy& policy,
                             const CategoricalTaskDist& dist) {
  return expected_regret(std::span<const double>(policy.probs()), dist);
}

}  // namespace metashift
