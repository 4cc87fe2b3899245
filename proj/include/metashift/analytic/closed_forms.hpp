#pragma once

#include <span>
#include <vector>

#include "metashift/core/distributions.hpp"

namespace metashift {

// A concentrated training distribution plus a robustness radius, the setting
// in which the closed forms below are exact.
struct RobustSetup {
  GoalSpace space;
  double beta = 0.0;     // mass outside the core under training
  double epsilon = 0.0;  // TV robustness radius

  RobustSetup(GoalSpace s, double beta_, double epsilon_);
};

// Effective shift: min(epsilon + beta, 1 - |S0|/|S|).
double epsilon_bar(const RobustSetup& setup);

// Minimizer of expected regret for a fixed task distribution:
// pi(g) proportional to sqrt(q(g)); zero exactly where q is zero.
std::vector<double> optimal_policy(const CategoricalTaskDist& dist);

// Optimal robust policy against TV perturbations of the concentrated
// training distribution: piecewise constant, proportional to
// sqrt((1-ebar)/|S0|) on the core and sqrt(ebar/(|S|-|S0|)) outside.
std::vector<double> robust_policy(const RobustSetup& setup);

// The adversarial distribution attaining the worst case for the matched
// robust policy: (1-ebar) uniform on the core, ebar uniform outside, where
// ebar folds the training concentration into the shift. The construction is
// policy-independent; the policy argument is validated for shape so a
// mismatched pairing fails loudly. Requires p_d of concentrated form and
// epsilon <= 1 - beta.
CategoricalTaskDist worst_case_shift(std::span<const double> policy_probs,
                                     const CategoricalTaskDist& p_d,
                                     double epsilon, int n_core);

// Decomposes a concentrated distribution; throws when p_d is not constant
// on the core and on its complement.
double concentration_of(const CategoricalTaskDist& p_d, int n_core);

// Excess regret of an eps2-robust policy over the eps1-robust policy on the
// adversarial distribution constructed for eps1:
//   (c + 1/c - 2) * sqrt(ebar1 (1-ebar1) |S0| |S1|),
//   c = sqrt((1/ebar2 - 1) / (1/ebar1 - 1)).
// Effective shifts at 0 or 1 make c degenerate; those cases are returned as
// tagged limits rather than NaN: ebar2 -> 0 or 1 gives an infinite value,
// ebar1 -> 0 or 1 a finite one.
struct ExcessRegret {
  enum class Boundary { none, ebar1_zero, ebar1_one, ebar2_zero, ebar2_one };
  double value = 0.0;
  double mismatch_c = 1.0;  // finite branch only
  Boundary boundary = Boundary::none;
};

ExcessRegret excess_regret(double epsilon1, double epsilon2,
                           const GoalSpace& space, double beta);

}  // namespace metashift
