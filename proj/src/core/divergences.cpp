#include "metashift/core/divergences.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace metashift {

double tv_distance(const CategoricalTaskDist& p, const CategoricalTaskDist& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("tv_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

double kl_categorical(const CategoricalTaskDist& p, const CategoricalTaskDist& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_categorical: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc < 0.0 ? 0.0 : acc;  // guard tiny negative rounding
}

double kl_gaussians(const DiagonalGaussian& p, const DiagonalGaussian& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("kl_gaussians: dimension mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const double s1 = p.stddev()[j];
    const double s2 = q.stddev()[j];
    const double dm = p.mean()[j] - q.mean()[j];
    acc += std::log(s2 / s1) + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5;
  }
  return acc < 0.0 ? 0.0 : acc;
}

}  // namespace metashift
