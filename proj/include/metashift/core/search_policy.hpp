#pragma once

#include <cstddef>
#include <vector>

namespace metashift {

// Tabular search policy: a probability vector over discretized goals,
// parameterized by softmax logits. Support is full by construction; probs
// are floored at 1e-300 before renormalization so underflow of extreme
// logits cannot produce an exact zero. Immutable after construction.
class SearchPolicy {
 public:
  explicit SearchPolicy(std::vector<double> logits);

  static SearchPolicy uniform(std::size_t n_goals);

  std::size_t n_goals() const { return logits_.size(); }
  const std::vector<double>& logits() const { return logits_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> logits_;
  std::vector<double> probs_;
};

}  // namespace metashift
