#include "metashift/harness/sampler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace metashift {

RadialLaw RadialLaw::uniform_law(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi >= lo))
    throw std::invalid_argument("RadialLaw: need 0 <= lo <= hi");
  RadialLaw law;
  law.kind = Kind::uniform;
  law.lo = lo;
  law.hi = hi;
  return law;
}

RadialLaw RadialLaw::exponential_law(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("RadialLaw: rate must be > 0");
  RadialLaw law;
  law.kind = Kind::exponential;
  law.rate = rate;
  return law;
}

double RadialLaw::sample(Rng& rng) const {
  if (kind == Kind::uniform) {
    return lo == hi ? lo : rng.uniform(lo, hi);
  }
  return rng.exponential(rate);
}

double RadialLaw::band_mass(double r0, double r1) const {
  if (!(r1 >= r0)) throw std::invalid_argument("band_mass: need r1 >= r0");
  if (kind == Kind::uniform) {
    if (hi == lo) return (lo >= r0 && lo < r1) ? 1.0 : 0.0;
    const double a = std::max(r0, lo);
    const double b = std::min(r1, hi);
    return b > a ? (b - a) / (hi - lo) : 0.0;
  }
  return std::exp(-rate * r0) - std::exp(-rate * r1);
}

Vec2 sample_task(const TaskSampler& sampler, Rng& rng) {
  const double d = sampler.radial.sample(rng);
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {d * std::cos(theta), d * std::sin(theta)};
}

CategoricalTaskDist discretize_on_grid(const TaskSampler& sampler,
                                       const PolarGrid& grid, double smoothing) {
  if (!(smoothing >= 0.0 && smoothing < 1.0))
    throw std::invalid_argument("discretize_on_grid: smoothing outside [0,1)");
  std::vector<double> p(grid.n_cells(), 0.0);
  double total = 0.0;
  for (int band = 0; band < grid.n_radii(); ++band) {
    const double mass = sampler.radial.band_mass(grid.band_lo(band),
                                                 grid.band_hi(band)) /
                        grid.n_angles();
    for (int w = 0; w < grid.n_angles(); ++w) {
      p[static_cast<std::size_t>(band) * grid.n_angles() + w] = mass;
      total += mass;
    }
  }
  if (!(total > 0.0))
    throw std::invalid_argument(
        "discretize_on_grid: law places no mass inside the grid");
  const double u = 1.0 / static_cast<double>(grid.n_cells());
  for (double& v : p) v = (1.0 - smoothing) * (v / total) + smoothing * u;
  return CategoricalTaskDist::normalized(std::move(p));
}

}  // namespace metashift
