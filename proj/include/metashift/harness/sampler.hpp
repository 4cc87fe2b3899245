#pragma once

#include "metashift/core/distributions.hpp"
#include "metashift/core/rng.hpp"
#include "metashift/harness/env.hpp"

namespace metashift {

// Radial law for the task parameter magnitude.
struct RadialLaw {
  enum class Kind { uniform, exponential };
  Kind kind = Kind::uniform;
  double lo = 0.0;    // uniform support [lo, hi]
  double hi = 0.0;
  double rate = 1.0;  // exponential rate

  static RadialLaw uniform_law(double lo, double hi);
  static RadialLaw exponential_law(double rate);

  double sample(Rng& rng) const;
  // P(radius in [r0, r1)).
  double band_mass(double r0, double r1) const;
};

// Task parameter sampler: magnitude from the radial law, angle uniform on
// [0, 2 pi), target = (d cos t, d sin t).
struct TaskSampler {
  RadialLaw radial;
};

Vec2 sample_task(const TaskSampler& sampler, Rng& rng);

// Projects the sampler's law onto the polar grid: band mass split evenly
// across wedges, truncated to the grid and renormalized, then mixed with a
// uniform floor so adversaries can reach every cell:
//   p = (1 - smoothing) * p_grid + smoothing * uniform.
CategoricalTaskDist discretize_on_grid(const TaskSampler& sampler,
                                       const PolarGrid& grid, double smoothing);

}  // namespace metashift
