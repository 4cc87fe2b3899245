#include "metashift/core/search_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metashift {

SearchPolicy::SearchPolicy(std::vector<double> logits)
    : logits_(std::move(logits)) {
  if (logits_.empty()) throw std::invalid_argument("SearchPolicy: no goals");
  for (double l : logits_) {
    if (!std::isfinite(l))
      throw std::invalid_argument("SearchPolicy: logits must be finite");
  }
  const double m = *std::max_element(logits_.begin(), logits_.end());
  probs_.resize(logits_.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits_.size(); ++i) {
    probs_[i] = std::exp(logits_[i] - m);
    sum += probs_[i];
  }
  double floored = 0.0;
  for (double& p : probs_) {
    p = std::max(p / sum, 1e-300);
    floored += p;
  }
  for (double& p : probs_) p /= floored;
}

SearchPolicy SearchPolicy::uniform(std::size_t n_goals) {
  return SearchPolicy(std::vector<double>(n_goals, 0.0));
}

}  // namespace metashift
