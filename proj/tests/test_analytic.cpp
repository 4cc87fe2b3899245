#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "metashift/analytic/brute_force.hpp"
#include "metashift/analytic/closed_forms.hpp"
#include "metashift/analytic/regret.hpp"
#include "metashift/core/divergences.hpp"
#include "metashift/core/rng.hpp"

using namespace metashift;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CategoricalTaskDist random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (double& v : w) v = rng.exponential(1.0);
  return CategoricalTaskDist::normalized(std::move(w));
}

std::vector<double> random_policy(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (double& v : w) v = rng.exponential(1.0) + 1e-3;
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return 0.5 * acc;
}

}  // namespace

TEST_CASE("task_regret is the reciprocal visitation probability") {
  CHECK(task_regret(std::vector<double>{0.5, 0.5}, 0) == doctest::Approx(2.0));
  const std::vector<double> u10(10, 0.1);
  for (std::size_t g = 0; g < 10; ++g)
    CHECK(task_regret(u10, g) == doctest::Approx(10.0));
  CHECK(task_regret(std::vector<double>{1.0, 0.0}, 1) == kInf);
  CHECK_THROWS(task_regret(u10, 10));
}

TEST_CASE("expected_regret composes per-goal regrets") {
  SUBCASE("uniform policy under uniform tasks over 4 goals") {
    const RegretReport r = expected_regret(std::vector<double>(4, 0.25),
                                           CategoricalTaskDist::uniform(4));
    CHECK(r.expected_regret == doctest::Approx(4.0).epsilon(1e-14));
  }
  SUBCASE("point mass recovers a single task regret") {
    const std::vector<double> pi{0.7, 0.2, 0.1};
    const RegretReport r =
        expected_regret(pi, CategoricalTaskDist({0.0, 1.0, 0.0}));
    CHECK(r.expected_regret == doctest::Approx(1.0 / 0.2).epsilon(1e-14));
  }
  SUBCASE("worked instance |S0|=2 |S1|=8 ebar=0.25") {
    const GoalSpace space(10, 2);
    const RobustSetup setup(space, 0.0, 0.25);
    const std::vector<double> pi = robust_policy(setup);
    const CategoricalTaskDist q =
        worst_case_shift(pi, make_concentrated(space, 0.0), 0.25, 2);
    // (1-e)|S0| + e|S1| + 2 sqrt(e(1-e)|S0||S1|) = 1.5 + 2 + 2 sqrt(3)
    const double expect = 3.5 + 2.0 * std::sqrt(3.0);
    CHECK(expected_regret(pi, q).expected_regret ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(6.9641016151377544).epsilon(1e-12));
  }
  SUBCASE("report decomposition is consistent") {
    Rng rng(3);
    const std::vector<double> pi = random_policy(5, rng);
    const CategoricalTaskDist q = random_simplex(5, rng);
    const RegretReport r = expected_regret(pi, q);
    double acc = 0.0;
    for (std::size_t g = 0; g < 5; ++g) acc += q[g] * r.per_goal_regret[g];
    CHECK(std::abs(acc - r.expected_regret) <= 1e-9);
    CHECK(r.expected_regret >= 1.0);
  }
  SUBCASE("mass on an unvisited goal is an infinite-regret signal") {
    const RegretReport r = expected_regret(std::vector<double>{1.0, 0.0},
                                           CategoricalTaskDist({0.5, 0.5}));
    CHECK(r.expected_regret == kInf);
  }
}

TEST_CASE("optimal_policy takes square roots of the task distribution") {
  SUBCASE("uniform is a fixed point") {
    const std::vector<double> pi = optimal_policy(CategoricalTaskDist::uniform(7));
    for (double p : pi) CHECK(p == doctest::Approx(1.0 / 7).epsilon(1e-14));
  }
  SUBCASE("(0.64, 0.36) normalizes to (4/7, 3/7)") {
    const std::vector<double> pi = optimal_policy(CategoricalTaskDist({0.64, 0.36}));
    CHECK(pi[0] == doctest::Approx(4.0 / 7).epsilon(1e-14));
    CHECK(pi[1] == doctest::Approx(3.0 / 7).epsilon(1e-14));
    // Independent grid minimizer of E[1/pi] on the 1-simplex at 1e-4.
    const std::vector<double> bf =
        brute_force_optimal_policy(CategoricalTaskDist({0.64, 0.36}), 1e-4);
    CHECK(tv(pi, bf) <= 2e-4);
  }
  SUBCASE("degenerate task distribution") {
    const std::vector<double> pi = optimal_policy(CategoricalTaskDist({1.0, 0.0}));
    CHECK(pi[0] == 1.0);
    CHECK(pi[1] == 0.0);
  }
  SUBCASE("Lemma optimality on random distributions beats random policies") {
    Rng rng(4);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = 3 + trial % 4;  // 3..6 goals
      const CategoricalTaskDist q = random_simplex(n, rng);
      const std::vector<double> star = optimal_policy(q);
      const double best = expected_regret(star, q).expected_regret;
      for (int j = 0; j < 100; ++j) {
        const std::vector<double> pi = random_policy(n, rng);
        CHECK(best <= expected_regret(pi, q).expected_regret + 1e-12);
      }
    }
  }
}

TEST_CASE("epsilon_bar folds concentration into the shift with a cap") {
  const GoalSpace space(10, 2);
  CHECK(epsilon_bar(RobustSetup(space, 0.05, 0.2)) == doctest::Approx(0.25));
  CHECK(epsilon_bar(RobustSetup(space, 0.05, 0.9)) == doctest::Approx(0.8));
  CHECK(epsilon_bar(RobustSetup(space, 0.0, 0.0)) == 0.0);
}

TEST_CASE("robust_policy piecewise closed form") {
  SUBCASE("cap makes it uniform over all goals") {
    const GoalSpace space(10, 2);
    const std::vector<double> pi = robust_policy(RobustSetup(space, 0.05, 2.0));
    for (double p : pi) CHECK(p == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("ebar 0 is uniform over the core only") {
    const GoalSpace space(10, 4);
    const std::vector<double> pi = robust_policy(RobustSetup(space, 0.0, 0.0));
    for (int g = 0; g < 4; ++g)
      CHECK(pi[static_cast<std::size_t>(g)] == doctest::Approx(0.25).epsilon(1e-12));
    for (int g = 4; g < 10; ++g) CHECK(pi[static_cast<std::size_t>(g)] == 0.0);
  }
  SUBCASE("worked values at ebar 0.25") {
    const GoalSpace space(10, 2);
    const std::vector<double> pi = robust_policy(RobustSetup(space, 0.0, 0.25));
    CHECK(pi[0] == doctest::Approx(0.23205080756887729).epsilon(1e-12));
    CHECK(pi[5] == doctest::Approx(0.066987298107780677).epsilon(1e-12));
  }
}

TEST_CASE("worst_case_shift constructs the adversarial two-block distribution") {
  const GoalSpace space(10, 2);
  const CategoricalTaskDist p_d = make_concentrated(space, 0.05);
  const std::vector<double> pi = robust_policy(RobustSetup(space, 0.05, 0.2));

  SUBCASE("zero radius returns the training distribution") {
    const CategoricalTaskDist q = worst_case_shift(pi, p_d, 0.0, 2);
    CHECK(tv_distance(p_d, q) <= 1e-12);
  }
  SUBCASE("worked split at beta 0.05 eps 0.2") {
    const CategoricalTaskDist q = worst_case_shift(pi, p_d, 0.2, 2);
    CHECK(q[0] == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(0.375).epsilon(1e-12));
    for (std::size_t g = 2; g < 10; ++g)
      CHECK(q[g] == doctest::Approx(0.03125).epsilon(1e-12));
    CHECK(tv_distance(p_d, q) <= 0.2 + 1e-12);
  }
  SUBCASE("always stays inside the TV ball") {
    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 4 + static_cast<int>(rng.uniform_index(5));
      const int core = 1 + static_cast<int>(rng.uniform_index(
                               static_cast<std::size_t>(n - 1)));
      const GoalSpace sp(n, core);
      const double bmax = 1.0 - static_cast<double>(core) / n;
      const double beta = rng.uniform(0.0, bmax);
      const double eps = rng.uniform(0.0, 1.0 - beta);
      const CategoricalTaskDist base = make_concentrated(sp, beta);
      const std::vector<double> pol =
          robust_policy(RobustSetup(sp, beta, eps));
      const CategoricalTaskDist q = worst_case_shift(pol, base, eps, core);
      CHECK(tv_distance(base, q) <= eps + 1e-12);
    }
  }
  SUBCASE("rejects malformed training distributions") {
    CHECK_THROWS(worst_case_shift(pi, CategoricalTaskDist({0.5, 0.2, 0.2, 0.05,
                                                           0.05, 0.0, 0.0, 0.0,
                                                           0.0, 0.0}),
                                  0.1, 2));
    CHECK_THROWS(worst_case_shift(pi, p_d, 0.97, 2));  // eps > 1 - beta
  }
}

TEST_CASE("brute_force_worst_case grid oracle") {
  const GoalSpace space(4, 2);
  const CategoricalTaskDist p_d = make_concentrated(space, 0.1);
  const std::vector<double> pi = robust_policy(RobustSetup(space, 0.1, 0.2));

  SUBCASE("zero radius returns the training distribution itself") {
    const CategoricalTaskDist q = brute_force_worst_case(pi, p_d, 0.0, 0.01);
    CHECK(tv_distance(q, p_d) <= 1e-9);  // p_d is grid-aligned here
  }
  SUBCASE("agreement with the closed-form construction at grid points") {
    // beta and eps are grid-aligned, so q^eps is in the search lattice and
    // the proof says nothing in the ball beats it.
    const CategoricalTaskDist grid_q = brute_force_worst_case(pi, p_d, 0.2, 0.01);
    const CategoricalTaskDist shift_q = worst_case_shift(pi, p_d, 0.2, 2);
    const double rg = expected_regret(pi, grid_q).expected_regret;
    const double rs = expected_regret(pi, shift_q).expected_regret;
    CHECK(std::abs(rg - rs) <= 1e-6);
  }
  SUBCASE("symmetric setups have permutation-invariant maximizer value") {
    const CategoricalTaskDist q = brute_force_worst_case(pi, p_d, 0.15, 0.02);
    // both outer goals look identical to the policy; swapping them cannot
    // change the achieved regret
    std::vector<double> swapped(q.probs());
    std::swap(swapped[2], swapped[3]);
    const CategoricalTaskDist qs = CategoricalTaskDist::normalized(swapped);
    CHECK(expected_regret(pi, q).expected_regret ==
          doctest::Approx(expected_regret(pi, qs).expected_regret).epsilon(1e-12));
  }
  SUBCASE("refuses oversized grids") {
    CHECK_THROWS(brute_force_worst_case(
        std::vector<double>(7, 1.0 / 7), CategoricalTaskDist::uniform(7), 0.1,
        0.01));
    CHECK_THROWS(brute_force_worst_case(pi, p_d, 0.1, 0.0001));
  }
}

TEST_CASE("tv_worst_case_exact matches the grid search") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + trial % 2;
    const CategoricalTaskDist p = random_simplex(n, rng);
    const std::vector<double> pi = random_policy(n, rng);
    const double eps = rng.uniform(0.02, 0.4);
    const BallWorstCase exact = tv_worst_case_exact(pi, p, eps);
    const CategoricalTaskDist grid_q = brute_force_worst_case(pi, p, eps, 0.01);
    const double grid_v = expected_regret(pi, grid_q).expected_regret;
    double max_r = 0.0;
    for (double v : pi) max_r = std::max(max_r, 1.0 / v);
    CHECK(grid_v <= exact.value + 1e-9);
    CHECK(exact.value - grid_v <= 2.0 * 0.01 * max_r);
    CHECK(tv_distance(p, CategoricalTaskDist::normalized(exact.q)) <= eps + 1e-9);
  }
}

TEST_CASE("kl_worst_case_value against a gridded KL ball") {
  Rng rng(8);
  SUBCASE("full-support base distribution") {
    for (int trial = 0; trial < 10; ++trial) {
      const CategoricalTaskDist p = random_simplex(3, rng);
      const std::vector<double> pi = random_policy(3, rng);
      const double eps = rng.uniform(0.02, 0.5);
      const double exact = kl_worst_case_value(pi, p, eps);

      double grid_best = 0.0;
      const int units = 200;
      for (int a = 0; a <= units; ++a) {
        for (int b = 0; b + a <= units; ++b) {
          const int c = units - a - b;
          std::vector<double> q{a / 200.0, b / 200.0, c / 200.0};
          double kl = 0.0;
          bool feasible = true;
          for (int g = 0; g < 3; ++g) {
            if (p[static_cast<std::size_t>(g)] == 0.0) continue;
            if (q[static_cast<std::size_t>(g)] == 0.0) {
              feasible = false;
              break;
            }
            kl += p[static_cast<std::size_t>(g)] *
                  std::log(p[static_cast<std::size_t>(g)] /
                           q[static_cast<std::size_t>(g)]);
          }
          if (!feasible || kl > eps) continue;
          double value = 0.0;
          for (int g = 0; g < 3; ++g)
            value += q[static_cast<std::size_t>(g)] /
                     pi[static_cast<std::size_t>(g)];
          grid_best = std::max(grid_best, value);
        }
      }
      double max_r = 0.0;
      for (double v : pi) max_r = std::max(max_r, 1.0 / v);
      CHECK(grid_best <= exact + 1e-9);
      CHECK(exact - grid_best <= 0.03 * max_r);
    }
  }
  SUBCASE("off-support mass is exploited through the renormalization budget") {
    const CategoricalTaskDist p({0.7, 0.3, 0.0});
    const std::vector<double> pi{0.5, 0.3, 0.2};
    const double eps = 0.2;
    const double exact = kl_worst_case_value(pi, p, eps);
    // feasibility sanity: value of the do-nothing distribution
    const double ep = 0.7 / 0.5 + 0.3 / 0.3;
    CHECK(exact >= ep);
    // moving t mass onto goal 2 and scaling the rest costs -log(1-t)
    const double t = 1.0 - std::exp(-eps);
    const double slice = t / 0.2 + (1.0 - t) * ep;
    CHECK(exact >= slice - 1e-9);
    CHECK(exact <= 1.0 / 0.2 + 1e-9);  // everything on the best goal is a bound
  }
  SUBCASE("zero radius reduces to the expected regret on p") {
    const CategoricalTaskDist p({0.6, 0.4});
    const std::vector<double> pi{0.5, 0.5};
    CHECK(kl_worst_case_value(pi, p, 0.0) ==
          doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("excess_regret closed form") {
  const GoalSpace space(10, 2);
  SUBCASE("matched robustness costs nothing") {
    CHECK(excess_regret(0.3, 0.3, space, 0.05).value == 0.0);
  }
  SUBCASE("worked instance") {
    const ExcessRegret ex = excess_regret(0.2, 0.0, space, 0.05);
    CHECK(ex.boundary == ExcessRegret::Boundary::none);
    // (c + 1/c - 2) sqrt(0.25 * 0.75 * 16), c = sqrt(19/3)
    CHECK(ex.value == doctest::Approx(1.5830445300146043).epsilon(1e-12));
    CHECK(ex.mismatch_c == doctest::Approx(std::sqrt(19.0 / 3.0)).epsilon(1e-12));
  }
  SUBCASE("equals the direct regret difference on the constructed shift") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 4 + static_cast<int>(rng.uniform_index(5));
      const int core = 1 + static_cast<int>(rng.uniform_index(
                               static_cast<std::size_t>(n - 2)));
      const GoalSpace sp(n, core);
      const double bmax = 1.0 - static_cast<double>(core) / n;
      const double beta = rng.uniform(0.02, 0.8 * bmax);
      const double e1 = rng.uniform(0.0, 0.9 * bmax - beta > 0 ? 0.9 * bmax - beta : 0.01);
      const double e2 = rng.uniform(0.0, 0.9 * bmax - beta > 0 ? 0.9 * bmax - beta : 0.01);
      const ExcessRegret ex = excess_regret(e1, e2, sp, beta);
      const CategoricalTaskDist p_d = make_concentrated(sp, beta);
      const std::vector<double> pi1 = robust_policy(RobustSetup(sp, beta, e1));
      const std::vector<double> pi2 = robust_policy(RobustSetup(sp, beta, e2));
      const CategoricalTaskDist q1 = worst_case_shift(pi1, p_d, e1, core);
      const double direct = expected_regret(pi2, q1).expected_regret -
                            expected_regret(pi1, q1).expected_regret;
      CHECK(ex.value == doctest::Approx(direct).epsilon(1e-9));
    }
  }
  SUBCASE("swapping the effective shifts leaves the mismatch factor term fixed") {
    const ExcessRegret a = excess_regret(0.2, 0.1, space, 0.05);
    const ExcessRegret b = excess_regret(0.05, 0.25, space, 0.0);
    // ebar pairs are (0.25, 0.15) and (0.05, 0.25); check c <-> 1/c algebra
    const double ca = a.mismatch_c;
    CHECK(ca + 1.0 / ca == doctest::Approx((1.0 / ca) + ca));
    CHECK(b.value >= 0.0);
  }
  SUBCASE("boundary tags") {
    // beta = 0, eps2 = 0: infinite excess regret
    const ExcessRegret inf_case = excess_regret(0.2, 0.0, GoalSpace(4, 2), 0.0);
    CHECK(inf_case.value == kInf);
    CHECK(inf_case.boundary == ExcessRegret::Boundary::ebar2_zero);

    // ebar1 = 0 has the finite limit sqrt(|S0||S1| eb2/(1-eb2)); equals the
    // direct difference because q^0 stays inside both supports.
    const GoalSpace sp(4, 2);
    const ExcessRegret lim = excess_regret(0.0, 0.2, sp, 0.0);
    CHECK(lim.boundary == ExcessRegret::Boundary::ebar1_zero);
    CHECK(lim.value == doctest::Approx(1.0).epsilon(1e-12));
    const CategoricalTaskDist p_d = make_concentrated(sp, 0.0);
    const std::vector<double> pi1 = robust_policy(RobustSetup(sp, 0.0, 0.0));
    const std::vector<double> pi2 = robust_policy(RobustSetup(sp, 0.0, 0.2));
    const CategoricalTaskDist q1 = worst_case_shift(pi1, p_d, 0.0, 2);
    const double direct = expected_regret(pi2, q1).expected_regret -
                          expected_regret(pi1, q1).expected_regret;
    CHECK(lim.value == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("brute_force_robust_policy minimax oracle") {
  SUBCASE("zero radius collapses to the fixed-distribution optimum") {
    Rng rng(10);
    const CategoricalTaskDist q = random_simplex(4, rng);
    const std::vector<double> bf = brute_force_robust_policy(q, 0.0, 0.01);
    CHECK(tv(bf, optimal_policy(q)) <= 0.02);
  }
  SUBCASE("worked setup matches the closed form within grid resolution") {
    const GoalSpace space(4, 2);
    const CategoricalTaskDist p_d = make_concentrated(space, 0.1);
    const std::vector<double> bf = brute_force_robust_policy(p_d, 0.2, 0.01);
    const std::vector<double> closed =
        robust_policy(RobustSetup(space, 0.1, 0.2));
    CHECK(tv(bf, closed) <= 0.02);
  }
  SUBCASE("uniform training distribution keeps the uniform policy") {
    const CategoricalTaskDist u = CategoricalTaskDist::uniform(4);
    const std::vector<double> bf = brute_force_robust_policy(u, 0.3, 0.02);
    CHECK(tv(bf, std::vector<double>(4, 0.25)) <= 0.04);
  }
}

TEST_CASE("robust optimality against the matched worst case") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_index(3));
    const int core = 1 + static_cast<int>(rng.uniform_index(
                             static_cast<std::size_t>(n - 2)));
    const GoalSpace sp(n, core);
    const double bmax = 1.0 - static_cast<double>(core) / n;
    const double beta = rng.uniform(0.02, 0.6 * bmax);
    const double eps = rng.uniform(0.01, 0.35 * bmax);
    const CategoricalTaskDist p_d = make_concentrated(sp, beta);
    const std::vector<double> star = robust_policy(RobustSetup(sp, beta, eps));
    const CategoricalTaskDist q = worst_case_shift(star, p_d, eps, core);
    const double best = expected_regret(star, q).expected_regret;
    for (int j = 0; j < 100; ++j) {
      std::vector<double> pert = star;
      double sum = 0.0;
      for (double& v : pert) {
        v = std::max(v + 0.05 * rng.normal(), 1e-4);
        sum += v;
      }
      for (double& v : pert) v /= sum;
      CHECK(best <= expected_regret(pert, q).expected_regret + 1e-9);
    }
  }
}

TEST_CASE("robust regret on the clean distribution is monotone in epsilon") {
  const GoalSpace space(12, 3);
  const double beta = 0.08;
  const CategoricalTaskDist p_d = make_concentrated(space, beta);
  double prev = -kInf;
  for (double eps = 0.0; eps <= 0.66; eps += 0.02) {
    const std::vector<double> pi = robust_policy(RobustSetup(space, beta, eps));
    const double r = expected_regret(pi, p_d).expected_regret;
    CHECK(r >= prev - 1e-3);
    prev = r;
  }
}
