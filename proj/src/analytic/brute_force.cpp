#include "metashift/analytic/brute_force.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace metashift {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxGoals = 6;
constexpr double kMaxNodes = 3.0e8;

struct GridSpec {
  long long units;
  double step;
};

GridSpec make_grid(double grid_step, int n) {
  if (n < 1 || n > kMaxGoals)
    throw std::invalid_argument(
        "brute force: grid too large (n_goals must be <= 6)");
  if (!(grid_step > 0.0) || grid_step > 1.0)
    throw std::invalid_argument("brute force: grid_step must be in (0, 1]");
  const long long units = std::llround(1.0 / grid_step);
  if (units < 1 || std::abs(units * grid_step - 1.0) > 1e-9)
    throw std::invalid_argument("brute force: 1/grid_step must be an integer");
  const double nodes = std::exp(std::lgamma(static_cast<double>(units + n)) -
                                std::lgamma(static_cast<double>(n)) -
                                std::lgamma(static_cast<double>(units + 1)));
  if (nodes > kMaxNodes)
    throw std::invalid_argument("brute force: grid too large");
  return {units, grid_step};
}

std::vector<double> counts_to_probs(const std::vector<long long>& counts,
                                    long long units) {
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(units);
  return p;
}

// Per-goal regrets 1/pi with the +infinity convention for zero mass.
std::vector<double> regrets_of(std::span<const double> policy) {
  std::vector<double> r(policy.size());
  for (std::size_t g = 0; g < policy.size(); ++g)
    r[g] = policy[g] > 0.0 ? 1.0 / policy[g] : kInf;
  return r;
}

// max sum q_g r_g over the TV ball around p, value only. r entries may be
// +infinity; the result is +infinity when such a goal is reachable.
double tv_inner_value(const double* r, const double* p, int n, double eps) {
  int top = 0;
  for (int g = 1; g < n; ++g)
    if (r[g] > r[top]) top = g;
  for (int g = 0; g < n; ++g) {
    if (r[g] == kInf && (p[g] > 0.0 || eps > 0.0)) return kInf;
  }
  double value = 0.0;
  for (int g = 0; g < n; ++g)
    if (p[g] > 0.0) value += p[g] * r[g];

  // Move budget mass from the cheapest goals onto the single best one.
  std::array<int, kMaxGoals> order{};
  int m = 0;
  for (int g = 0; g < n; ++g)
    if (g != top) order[m++] = g;
  std::sort(order.begin(), order.begin() + m,
            [&](int a, int b) { return r[a] < r[b]; });
  double budget = eps;
  for (int k = 0; k < m && budget > 0.0; ++k) {
    const int g = order[k];
    const double move = std::min(p[g], budget);
    value += move * (r[top] - r[g]);
    budget -= move;
  }
  return value;
}

// --- KL ball inner maximum ---------------------------------------------

// f(mu) = log(sum p/(mu-r)) + sum p log(mu-r) over the support of p;
// the constraint KL(p || q) = eps with off-support mass t reads
// f(mu) = eps + log(1-t). f decreases monotonically from +inf to 0.
double kl_f(const std::vector<double>& r, const std::vector<double>& p,
            double mu) {
  double s = 0.0;
  double lg = 0.0;
  for (std::size_t g = 0; g < p.size(); ++g) {
    if (p[g] == 0.0) continue;
    const double d = mu - r[g];
    s += p[g] / d;
    lg += p[g] * std::log(d);
  }
  return std::log(s) + lg;
}

double kl_value_at(const std::vector<double>& r, const std::vector<double>& p,
                   double mu, double mass) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t g = 0; g < p.size(); ++g) {
    if (p[g] == 0.0) continue;
    const double s = p[g] / (mu - r[g]);
    num += s * r[g];
    den += s;
  }
  return mass * num / den;
}

// Maximum of sum q r over support(p) with sum q = mass and the KL budget
// f(mu) <= target already reduced to the support slice.
double kl_support_max(const std::vector<double>& r, const std::vector<double>& p,
                      double mass, double target) {
  double r_max = -kInf;
  double r_min = kInf;
  int support = 0;
  for (std::size_t g = 0; g < p.size(); ++g) {
    if (p[g] == 0.0) continue;
    ++support;
    r_max = std::max(r_max, r[g]);
    r_min = std::min(r_min, r[g]);
  }
  if (support == 1) return mass * r_max;

  const double span = r_max - r_min;
  const double lo =
      r_max + std::max({1e-300, span * 1e-14, std::abs(r_max) * 1e-16});
  if (kl_f(r, p, lo) <= target) return mass * r_max;

  double hi = r_max + std::max(1.0, std::abs(r_max));
  int expand = 0;
  while (kl_f(r, p, hi) > target) {
    hi = r_max + (hi - r_max) * 2.0;
    if (++expand > 300)
      throw std::runtime_error("kl_worst_case: bracket expansion failed");
  }
  double a = lo;
  double b = hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (kl_f(r, p, mid) > target) a = mid;
    else b = mid;
  }
  return kl_value_at(r, p, 0.5 * (a + b), mass);
}

double kl_inner_value(const double* r_in, const double* p_in, int n,
                      double eps) {
  std::vector<double> r(r_in, r_in + n);
  std::vector<double> p(p_in, p_in + n);

  double off_best = -kInf;  // best regret reachable outside the support
  bool has_off = false;
  for (int g = 0; g < n; ++g) {
    if (p[g] > 0.0) {
      if (r[g] == kInf) return kInf;  // any feasible q keeps mass here
    } else {
      has_off = true;
      off_best = std::max(off_best, r[g]);
    }
  }
  if (eps == 0.0) {
    double v = 0.0;
    for (int g = 0; g < n; ++g)
      if (p[g] > 0.0) v += p[g] * r[g];
    return v;
  }
  if (has_off && off_best == kInf) return kInf;

  const double t_max = 1.0 - std::exp(-eps);
  auto slice = [&](double t) {
    return t * (has_off ? off_best : 0.0) +
           kl_support_max(r, p, 1.0 - t, eps + std::log1p(-t));
  };

  if (!has_off) return slice(0.0);

  // V(t) is concave on [0, t_max]; golden-section plus the boundary where
  // the whole budget is spent on renormalization (q = (1-t)p on support).
  double e_p = 0.0;
  for (int g = 0; g < n; ++g)
    if (p[g] > 0.0) e_p += p[g] * r[g];
  const double boundary = t_max * off_best + (1.0 - t_max) * e_p;

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0;
  double b = t_max * (1.0 - 1e-10);
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = slice(x1);
  double f2 = slice(x2);
  for (int it = 0; it < 120; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = slice(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = slice(x1);
    }
  }
  return std::max({f1, f2, slice(0.0), boundary});
}

}  // namespace

BallWorstCase tv_worst_case_exact(std::span<const double> policy_probs,
                                  const CategoricalTaskDist& p_d,
                                  double epsilon) {
  const int n = static_cast<int>(p_d.size());
  if (policy_probs.size() != p_d.size())
    throw std::invalid_argument("tv_worst_case_exact: length mismatch");
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("tv_worst_case_exact: epsilon must be >= 0");

  const std::vector<double> r = regrets_of(policy_probs);
  std::vector<double> q(p_d.probs());

  int top = 0;
  for (int g = 1; g < n; ++g)
    if (r[static_cast<std::size_t>(g)] > r[static_cast<std::size_t>(top)])
      top = g;

  std::vector<int> order;
  for (int g = 0; g < n; ++g)
    if (g != top) order.push_back(g);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return r[static_cast<std::size_t>(a)] < r[static_cast<std::size_t>(b)];
  });

  double budget = epsilon;
  for (int g : order) {
    if (budget <= 0.0) break;
    const double move = std::min(q[static_cast<std::size_t>(g)], budget);
    q[static_cast<std::size_t>(g)] -= move;
    q[static_cast<std::size_t>(top)] += move;
    budget -= move;
  }

  BallWorstCase out;
  out.value = tv_inner_value(r.data(), p_d.probs().data(), n, epsilon);
  out.q = std::move(q);
  return out;
}

double kl_worst_case_value(std::span<const double> policy_probs,
                           const CategoricalTaskDist& p_d, double epsilon) {
  if (policy_probs.size() != p_d.size())
    throw std::invalid_argument("kl_worst_case_value: length mismatch");
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("kl_worst_case_value: epsilon must be >= 0");
  const std::vector<double> r = regrets_of(policy_probs);
  return kl_inner_value(r.data(), p_d.probs().data(),
                        static_cast<int>(p_d.size()), epsilon);
}

CategoricalTaskDist brute_force_worst_case(std::span<const double> policy_probs,
                                           const CategoricalTaskDist& p_d,
                                           double epsilon, double grid_step) {
  const int n = static_cast<int>(p_d.size());
  if (policy_probs.size() != p_d.size())
    throw std::invalid_argument("brute_force_worst_case: length mismatch");
  const GridSpec grid = make_grid(grid_step, n);

  const std::vector<double> r = regrets_of(policy_probs);
  const std::vector<double>& p = p_d.probs();
  const double tv_budget = 2.0 * epsilon + 1e-12;

  std::vector<long long> counts(static_cast<std::size_t>(n), 0);
  std::vector<long long> best_counts;
  double best_value = -kInf;

  // suffix_p[d] = total training mass on coordinates d..n-1
  std::vector<double> suffix_p(static_cast<std::size_t>(n) + 1, 0.0);
  for (int d = n - 1; d >= 0; --d)
    suffix_p[static_cast<std::size_t>(d)] =
        suffix_p[static_cast<std::size_t>(d) + 1] +
        p[static_cast<std::size_t>(d)];

  auto contrib = [](double qv, double rg) {
    return qv > 0.0 ? qv * rg : 0.0;
  };

  auto leaf = [&](double abs_dev, double value) {
    if (abs_dev > tv_budget) return;
    if (value > best_value) {
      best_value = value;
      best_counts = counts;
    }
  };

  auto rec = [&](auto&& self, int depth, long long left, double abs_dev,
                 double value) -> void {
    if (depth == n - 1) {
      counts[static_cast<std::size_t>(depth)] = left;
      const double qv =
          static_cast<double>(left) / static_cast<double>(grid.units);
      leaf(abs_dev + std::abs(qv - p[static_cast<std::size_t>(depth)]),
           value + contrib(qv, r[static_cast<std::size_t>(depth)]));
      return;
    }
    for (long long c = 0; c <= left; ++c) {
      counts[static_cast<std::size_t>(depth)] = c;
      const double qv =
          static_cast<double>(c) / static_cast<double>(grid.units);
      const double a = abs_dev + std::abs(qv - p[static_cast<std::size_t>(depth)]);
      // Remaining coordinates deviate at least by the mass imbalance.
      const double rem_q = static_cast<double>(left - c) /
                           static_cast<double>(grid.units);
      const double bound = a + std::abs(rem_q - suffix_p[static_cast<std::size_t>(depth) + 1]);
      if (bound > tv_budget) continue;
      self(self, depth + 1, left - c, a,
           value + contrib(qv, r[static_cast<std::size_t>(depth)]));
    }
  };
  rec(rec, 0, grid.units, 0.0, 0.0);

  if (best_counts.empty())
    throw std::runtime_error("brute_force_worst_case: empty feasible grid");
  return CategoricalTaskDist::normalized(counts_to_probs(best_counts, grid.units));
}

namespace {

// Shared outer loop: enumerate policy grid points, score each with `inner`,
// keep the first strict minimizer. partial E_p[1/pi] is a valid lower bound
// on every inner objective used here, so subtrees are cut once it passes
// the incumbent.
template <class InnerFn>
std::vector<double> policy_grid_argmin(const CategoricalTaskDist& p_ref,
                                       double grid_step, InnerFn&& inner) {
  const int n = static_cast<int>(p_ref.size());
  const GridSpec grid = make_grid(grid_step, n);
  const std::vector<double>& p = p_ref.probs();

  std::vector<long long> counts(static_cast<std::size_t>(n), 0);
  std::vector<long long> best_counts;
  double best_value = kInf;
  std::vector<double> probs(static_cast<std::size_t>(n), 0.0);

  auto rec = [&](auto&& self, int depth, long long left, double partial) -> void {
    if (partial >= best_value) return;
    if (depth == n - 1) {
      counts[static_cast<std::size_t>(depth)] = left;
      for (int g = 0; g < n; ++g)
        probs[static_cast<std::size_t>(g)] =
            static_cast<double>(counts[static_cast<std::size_t>(g)]) /
            static_cast<double>(grid.units);
      const double value = inner(probs);
      if (value < best_value) {
        best_value = value;
        best_counts = counts;
      }
      return;
    }
    for (long long c = 0; c <= left; ++c) {
      counts[static_cast<std::size_t>(depth)] = c;
      const double pg = p[static_cast<std::size_t>(depth)];
      double contrib = 0.0;
      if (pg > 0.0) {
        if (c == 0) contrib = kInf;
        else
          contrib = pg * static_cast<double>(grid.units) /
                    static_cast<double>(c);
      }
      self(self, depth + 1, left - c, partial + contrib);
    }
  };
  rec(rec, 0, grid.units, 0.0);

  if (best_counts.empty())
    throw std::runtime_error("policy grid search found no finite candidate");
  return counts_to_probs(best_counts, grid.units);
}

}  // namespace

std::vector<double> brute_force_optimal_policy(const CategoricalTaskDist& dist,
                                               double grid_step) {
  const int n = static_cast<int>(dist.size());
  const std::vector<double>& q = dist.probs();
  return policy_grid_argmin(dist, grid_step, [&](const std::vector<double>& pi) {
    double v = 0.0;
    for (int g = 0; g < n; ++g) {
      if (q[static_cast<std::size_t>(g)] == 0.0) continue;
      if (pi[static_cast<std::size_t>(g)] == 0.0) return kInf;
      v += q[static_cast<std::size_t>(g)] / pi[static_cast<std::size_t>(g)];
    }
    return v;
  });
}

std::vector<double> brute_force_robust_policy(const CategoricalTaskDist& p_d,
                                              double epsilon, double grid_step) {
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("brute_force_robust_policy: epsilon >= 0");
  const int n = static_cast<int>(p_d.size());
  return policy_grid_argmin(p_d, grid_step, [&](const std::vector<double>& pi) {
    std::vector<double> r(pi.size());
    for (std::size_t g = 0; g < pi.size(); ++g)
      r[g] = pi[g] > 0.0 ? 1.0 / pi[g] : kInf;
    return tv_inner_value(r.data(), p_d.probs().data(), n, epsilon);
  });
}

std::vector<double> brute_force_kl_robust_policy(const CategoricalTaskDist& p_d,
                                                 double epsilon,
                                                 double grid_step) {
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("brute_force_kl_robust_policy: epsilon >= 0");
  const int n = static_cast<int>(p_d.size());
  return policy_grid_argmin(p_d, grid_step, [&](const std::vector<double>& pi) {
    std::vector<double> r(pi.size());
    for (std::size_t g = 0; g < pi.size(); ++g)
      r[g] = pi[g] > 0.0 ? 1.0 / pi[g] : kInf;
    return kl_inner_value(r.data(), p_d.probs().data(), n, epsilon);
  });
}

}  // namespace metashift
