#pragma once

#include <cstddef>
#include <vector>

#include "metashift/core/rng.hpp"

namespace metashift {

// Finite goal space with a distinguished core subset. Goals are dense
// integer indices; the core goals are 0 .. n_core-1.
struct GoalSpace {
  int n_goals = 0;
  int n_core = 0;

  GoalSpace(int goals, int core);
  int n_outer() const { return n_goals - n_core; }
};

// Probability vector over goals (or tasks). Immutable after construction.
class CategoricalTaskDist {
 public:
  // Validates: entries >= 0, sum within 1e-12 of 1.
  explicit CategoricalTaskDist(std::vector<double> probs);

  // Rescales a nonnegative, not-all-zero vector to sum exactly to 1.
  static CategoricalTaskDist normalized(std::vector<double> weights);
  static CategoricalTaskDist uniform(std::size_t n);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

  std::size_t sample(Rng& rng) const;

 private:
  std::vector<double> probs_;
};

// Strictly positive weights over a finite set of training tasks; induces
// the categorical distribution q(i) = w_i / sum_j w_j.
class ReweightedEmpiricalDist {
 public:
  explicit ReweightedEmpiricalDist(std::vector<double> weights);

  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

CategoricalTaskDist as_categorical(const ReweightedEmpiricalDist& d);

// Diagonal Gaussian over a latent task space.
class DiagonalGaussian {
 public:
  DiagonalGaussian(std::vector<double> mean, std::vector<double> stddev);

  static DiagonalGaussian standard(std::size_t dim);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }

  double log_density(const std::vector<double>& z) const;
  std::vector<double> sample(Rng& rng) const;

 private:
  std::vector<double> mean_;
  std::vector<double> stddev_;
};

// Training distribution concentrated on the core goals:
// mass (1-beta) spread uniformly over the core, beta uniformly outside.
// beta must lie in [0, 1 - n_core/n_goals].
CategoricalTaskDist make_concentrated(const GoalSpace& space, double beta);

// Strictly increasing robustness levels with levels[0] == 0.
class EpsilonGrid {
 public:
  explicit EpsilonGrid(std::vector<double> levels);

  static EpsilonGrid out_of_support_default();  // 0.0 .. 0.8 step 0.1
  static EpsilonGrid in_support_default();      // 0.0 .. 0.4 step 0.05

  std::size_t size() const { return levels_.size(); }
  double operator[](std::size_t i) const { return levels_[i]; }
  const std::vector<double>& levels() const { return levels_; }

  // Index of the grid level closest to eps (ties toward the lower level).
  std::size_t nearest(double eps) const;

 private:
  std::vector<double> levels_;
};

}  // namespace metashift
