#pragma once

#include "metashift/core/distributions.hpp"

namespace metashift {

// Total variation distance, 0.5 * sum |p_i - q_i|. Requires equal lengths.
double tv_distance(const CategoricalTaskDist& p, const CategoricalTaskDist& q);

// KL(p || q) in nats, summed over the support of p. Returns +infinity when
// q assigns zero mass to a goal with p-mass (so callers can reject proposals
// instead of catching exceptions).
double kl_categorical(const CategoricalTaskDist& p, const CategoricalTaskDist& q);

// Closed-form KL(p || q) for diagonal Gaussians of equal dimension.
double kl_gaussians(const DiagonalGaussian& p, const DiagonalGaussian& q);

}  // namespace metashift
