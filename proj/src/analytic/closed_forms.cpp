#include "metashift/analytic/closed_forms.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace metashift {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

RobustSetup::RobustSetup(GoalSpace s, double beta_, double epsilon_)
    : space(s), beta(beta_), epsilon(epsilon_) {
  const double beta_max =
      1.0 - static_cast<double>(space.n_core) / space.n_goals;
  if (!(beta >= 0.0) || beta > beta_max + 1e-15)
    throw std::invalid_argument("RobustSetup: beta outside [0, 1 - |S0|/|S|]");
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("RobustSetup: epsilon must be >= 0");
}

double epsilon_bar(const RobustSetup& setup) {
  const double cap =
      1.0 - static_cast<double>(setup.space.n_core) / setup.space.n_goals;
  return std::min(setup.epsilon + setup.beta, cap);
}

std::vector<double> optimal_policy(const CategoricalTaskDist& dist) {
  std::vector<double> pi(dist.size());
  double z = 0.0;
  for (std::size_t g = 0; g < dist.size(); ++g) {
    pi[g] = std::sqrt(dist[g]);
    z += pi[g];
  }
  for (double& p : pi) p /= z;
  return pi;
}

std::vector<double> robust_policy(const RobustSetup& setup) {
  const int n = setup.space.n_goals;
  const int n_core = setup.space.n_core;
  const double eb = epsilon_bar(setup);

  std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
  const double core_val = std::sqrt((1.0 - eb) / n_core);
  const double outer_val =
      setup.space.n_outer() > 0 ? std::sqrt(eb / setup.space.n_outer()) : 0.0;
  double z = 0.0;
  for (int g = 0; g < n; ++g) {
    pi[static_cast<std::size_t>(g)] = g < n_core ? core_val : outer_val;
    z += pi[static_cast<std::size_t>(g)];
  }
  for (double& p : pi) p /= z;
  return pi;
}

double concentration_of(const CategoricalTaskDist& p_d, int n_core) {
  const int n = static_cast<int>(p_d.size());
  if (n_core < 1 || n_core > n)
    throw std::invalid_argument("concentration_of: bad core size");
  const double core_val = p_d[0];
  double outer_mass = 0.0;
  for (int g = 0; g < n; ++g) {
    const double v = p_d[static_cast<std::size_t>(g)];
    const double expect = g < n_core ? core_val
                                     : p_d[static_cast<std::size_t>(n_core)];
    if (std::abs(v - expect) > 1e-12)
      throw std::invalid_argument(
          "concentration_of: distribution is not of concentrated form");
    if (g >= n_core) outer_mass += v;
  }
  return outer_mass;
}

CategoricalTaskDist worst_case_shift(std::span<const double> policy_probs,
                                     const CategoricalTaskDist& p_d,
                                     double epsilon, int n_core) {
  if (policy_probs.size() != p_d.size())
    throw std::invalid_argument("worst_case_shift: policy length mismatch");
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("worst_case_shift: epsilon must be >= 0");

  const double beta = concentration_of(p_d, n_core);
  if (epsilon > 1.0 - beta + 1e-12)
    throw std::invalid_argument("worst_case_shift: epsilon exceeds 1 - beta");

  const GoalSpace space(static_cast<int>(p_d.size()), n_core);
  const RobustSetup setup(space, beta, epsilon);
  const double eb = epsilon_bar(setup);

  std::vector<double> q(p_d.size(), 0.0);
  for (int g = 0; g < space.n_goals; ++g) {
    q[static_cast<std::size_t>(g)] =
        g < n_core ? (1.0 - eb) / n_core
                   : eb / static_cast<double>(space.n_outer());
  }
  return CategoricalTaskDist::normalized(std::move(q));
}

ExcessRegret excess_regret(double epsilon1, double epsilon2,
                           const GoalSpace& space, double beta) {
  const double eb1 = epsilon_bar(RobustSetup(space, beta, epsilon1));
  const double eb2 = epsilon_bar(RobustSetup(space, beta, epsilon2));
  const double s0 = space.n_core;
  const double s1 = space.n_outer();

  ExcessRegret out;
  if (eb1 == eb2) return out;  // matched robustness, zero excess

  // Degenerate effective shifts: report the limiting value and which side
  // of c collapsed.
  if (eb2 == 0.0) {
    out.value = kInf;
    out.boundary = ExcessRegret::Boundary::ebar2_zero;
    return out;
  }
  if (eb2 == 1.0) {
    out.value = kInf;
    out.boundary = ExcessRegret::Boundary::ebar2_one;
    return out;
  }
  if (eb1 == 0.0) {
    out.value = std::sqrt(s0 * s1 * eb2 / (1.0 - eb2));
    out.boundary = ExcessRegret::Boundary::ebar1_zero;
    return out;
  }
  if (eb1 == 1.0) {
    out.value = std::sqrt(s0 * s1 * (1.0 - eb2) / eb2);
    out.boundary = ExcessRegret::Boundary::ebar1_one;
    return out;
  }

  const double c = std::sqrt((1.0 / eb2 - 1.0) / (1.0 / eb1 - 1.0));
  out.mismatch_c = c;
  out.value = (c + 1.0 / c - 2.0) * std::sqrt(eb1 * (1.0 - eb1) * s0 * s1);
  return out;
}

}  // namespace metashift
