#include "metashift/core/distributions.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace metashift {

GoalSpace::GoalSpace(int goals, int core) : n_goals(goals), n_core(core) {
  if (goals < 1) throw std::invalid_argument("GoalSpace: n_goals must be >= 1");
  if (core < 1 || core > goals)
    throw std::invalid_argument("GoalSpace: need 1 <= n_core <= n_goals");
}

CategoricalTaskDist::CategoricalTaskDist(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty())
    throw std::invalid_argument("CategoricalTaskDist: empty probability vector");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0))
      throw std::invalid_argument("CategoricalTaskDist: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("CategoricalTaskDist: probabilities sum to " +
                                std::to_string(sum));
}

CategoricalTaskDist CategoricalTaskDist::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      throw std::invalid_argument("CategoricalTaskDist: negative weight");
    sum += w;
  }
  if (!(sum > 0.0))
    throw std::invalid_argument("CategoricalTaskDist: all-zero weights");
  for (double& w : weights) w /= sum;
  return CategoricalTaskDist(std::move(weights));
}

CategoricalTaskDist CategoricalTaskDist::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform: n must be > 0");
  return normalized(std::vector<double>(n, 1.0));
}

std::size_t CategoricalTaskDist::sample(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    if (u < acc) return i;
  }
  return probs_.size() - 1;
}

ReweightedEmpiricalDist::ReweightedEmpiricalDist(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty())
    throw std::invalid_argument("ReweightedEmpiricalDist: no tasks");
  for (double w : weights_) {
    if (!(w > 0.0))
      throw std::invalid_argument(
          "ReweightedEmpiricalDist: weights must be strictly positive");
  }
}

CategoricalTaskDist as_categorical(const ReweightedEmpiricalDist& d) {
  return CategoricalTaskDist::normalized(d.weights());
}

DiagonalGaussian::DiagonalGaussian(std::vector<double> mean,
                                   std::vector<double> stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
  if (mean_.empty() || mean_.size() != stddev_.size())
    throw std::invalid_argument("DiagonalGaussian: inconsistent dimensions");
  for (double s : stddev_) {
    if (!(s > 0.0))
      throw std::invalid_argument("DiagonalGaussian: stddev must be > 0");
  }
}

DiagonalGaussian DiagonalGaussian::standard(std::size_t dim) {
  return DiagonalGaussian(std::vector<double>(dim, 0.0),
                          std::vector<double>(dim, 1.0));
}

double DiagonalGaussian::log_density(const std::vector<double>& z) const {
  if (z.size() != dim())
    throw std::invalid_argument("log_density: dimension mismatch");
  double out = -0.5 * static_cast<double>(dim()) *
               std::log(2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < dim(); ++j) {
    const double d = (z[j] - mean_[j]) / stddev_[j];
    out -= std::log(stddev_[j]) + 0.5 * d * d;
  }
  return out;
}

std::vector<double> DiagonalGaussian::sample(Rng& rng) const {
  std::vector<double> z(dim());
  for (std::size_t j = 0; j < dim(); ++j)
    z[j] = mean_[j] + stddev_[j] * rng.normal();
  return z;
}

CategoricalTaskDist make_concentrated(const GoalSpace& space, double beta) {
  const double beta_max = 1.0 - static_cast<double>(space.n_core) /
                                    static_cast<double>(space.n_goals);
  if (!(beta >= 0.0) || beta > beta_max + 1e-15)
    throw std::invalid_argument("make_concentrated: beta outside [0, 1 - |S0|/|S|]");
  if (space.n_core == space.n_goals && beta > 0.0)
    throw std::invalid_argument("make_concentrated: no outer goals but beta > 0");

  std::vector<double> p(static_cast<std::size_t>(space.n_goals), 0.0);
  const double core = (1.0 - beta) / space.n_core;
  for (int g = 0; g < space.n_core; ++g) p[static_cast<std::size_t>(g)] = core;
  if (space.n_outer() > 0) {
    const double outer = beta / space.n_outer();
    for (int g = space.n_core; g < space.n_goals; ++g)
      p[static_cast<std::size_t>(g)] = outer;
  }
  return CategoricalTaskDist::normalized(std::move(p));
}

EpsilonGrid::EpsilonGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw std::invalid_argument("EpsilonGrid: empty");
  if (levels_.front() != 0.0)
    throw std::invalid_argument("EpsilonGrid: first level must be 0");
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (!(levels_[i] > levels_[i - 1]))
      throw std::invalid_argument("EpsilonGrid: levels must strictly increase");
  }
}

EpsilonGrid EpsilonGrid::out_of_support_default() {
  std::vector<double> l;
  for (int i = 0; i <= 8; ++i) l.push_back(0.1 * i);
  return EpsilonGrid(std::move(l));
}

EpsilonGrid EpsilonGrid::in_support_default() {
  std::vector<double> l;
  for (int i = 0; i <= 8; ++i) l.push_back(0.05 * i);
  return EpsilonGrid(std::move(l));
}

std::size_t EpsilonGrid::nearest(double eps) const {
  std::size_t best = 0;
  double best_d = std::abs(eps - levels_[0]);
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    const double d = std::abs(eps - levels_[i]);
    if (d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

}  // namespace metashift
