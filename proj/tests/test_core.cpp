#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "metashift/core/distributions.hpp"
#include "metashift/core/divergences.hpp"
#include "metashift/core/rng.hpp"
#include "metashift/core/search_policy.hpp"

using namespace metashift;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CategoricalTaskDist random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (double& v : w) v = rng.exponential(1.0);
  return CategoricalTaskDist::normalized(std::move(w));
}

// Midpoint-rule integral of p log(p/q) for 1-D Gaussians; independent of the
// closed form under test.
double kl_gauss_quadrature(double mu1, double s1, double mu2, double s2) {
  const double lo = mu1 - 14.0 * s1;
  const double hi = mu1 + 14.0 * s1;
  const int n = 200000;
  const double h = (hi - lo) / n;
  auto log_pdf = [](double x, double mu, double s) {
    const double d = (x - mu) / s;
    return -0.5 * d * d - std::log(s) - 0.5 * std::log(2.0 * M_PI);
  };
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double lp = log_pdf(x, mu1, s1);
    acc += std::exp(lp) * (lp - log_pdf(x, mu2, s2));
  }
  return acc * h;
}

}  // namespace

TEST_CASE("make_concentrated evaluates the two-block form") {
  const GoalSpace s42(4, 2);
  SUBCASE("beta 0 puts all mass on the core") {
    const CategoricalTaskDist p = make_concentrated(s42, 0.0);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p[2] == 0.0);
    CHECK(p[3] == 0.0);
  }
  SUBCASE("symmetric beta gives the uniform distribution") {
    const CategoricalTaskDist p = make_concentrated(s42, 0.5);
    for (std::size_t g = 0; g < 4; ++g)
      CHECK(p[g] == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("direct evaluation at beta 0.2") {
    const CategoricalTaskDist p = make_concentrated(s42, 0.2);
    CHECK(p[0] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(p[2] == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(p[3] == doctest::Approx(0.1).epsilon(1e-14));
  }
  SUBCASE("beta outside the admissible range") {
    CHECK_THROWS(make_concentrated(s42, 0.6));
    CHECK_THROWS(make_concentrated(s42, -0.1));
    CHECK_THROWS(make_concentrated(GoalSpace(3, 3), 0.1));
    CHECK_NOTHROW(make_concentrated(GoalSpace(3, 3), 0.0));
  }
  SUBCASE("sum and block-constancy for random beta") {
    Rng rng(11);
    const GoalSpace space(9, 3);
    for (int trial = 0; trial < 200; ++trial) {
      const double beta = rng.uniform(0.0, 1.0 - 3.0 / 9.0);
      const CategoricalTaskDist p = make_concentrated(space, beta);
      double sum = 0.0;
      for (std::size_t g = 0; g < 9; ++g) sum += p[g];
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      for (int g = 1; g < 3; ++g) CHECK(p[g] == p[0]);
      for (int g = 4; g < 9; ++g) CHECK(p[g] == p[3]);
    }
  }
}

TEST_CASE("tv_distance basics and metric properties") {
  const CategoricalTaskDist p({0.5, 0.5});
  CHECK(tv_distance(p, p) == 0.0);
  CHECK(tv_distance(CategoricalTaskDist({1.0, 0.0}),
                    CategoricalTaskDist({0.0, 1.0})) == doctest::Approx(1.0));
  CHECK(tv_distance(p, CategoricalTaskDist({0.75, 0.25})) ==
        doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS(tv_distance(p, CategoricalTaskDist({1.0, 0.0, 0.0})));

  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const CategoricalTaskDist a = random_simplex(5, rng);
    const CategoricalTaskDist b = random_simplex(5, rng);
    const CategoricalTaskDist c = random_simplex(5, rng);
    const double ab = tv_distance(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(std::abs(ab - tv_distance(b, a)) <= 1e-12);
    CHECK(ab <= tv_distance(a, c) + tv_distance(c, b) + 1e-12);
    CHECK(tv_distance(a, a) == 0.0);
  }
}

TEST_CASE("kl_categorical examples and non-negativity") {
  const CategoricalTaskDist u2 = CategoricalTaskDist::uniform(2);
  CHECK(kl_categorical(u2, u2) == 0.0);

  // 0.5 log(0.5/0.75) + 0.5 log(0.5/0.25), cross-checked by summation
  const CategoricalTaskDist q({0.75, 0.25});
  double by_hand = 0.0;
  for (std::size_t i = 0; i < 2; ++i) by_hand += u2[i] * std::log(u2[i] / q[i]);
  CHECK(kl_categorical(u2, q) == doctest::Approx(by_hand).epsilon(1e-15));
  CHECK(kl_categorical(u2, q) ==
        doctest::Approx(0.14384103622589046).epsilon(1e-12));

  CHECK(kl_categorical(CategoricalTaskDist({1.0, 0.0}), u2) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));

  SUBCASE("support violation is an infinite-divergence signal, not a throw") {
    CHECK(kl_categorical(u2, CategoricalTaskDist({1.0, 0.0})) == kInf);
  }

  SUBCASE("non-negative on random pairs, zero iff equal on support") {
    Rng rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
      const CategoricalTaskDist a = random_simplex(4, rng);
      const CategoricalTaskDist b = random_simplex(4, rng);
      CHECK(kl_categorical(a, b) >= 0.0);
      CHECK(kl_categorical(a, a) <= 1e-15);
    }
  }

  SUBCASE("reweighted empirical specialization against uniform base") {
    // KL(uniform || w/sum w) = (1/n) sum_i log(sum_j w_j / (n w_i))
    const ReweightedEmpiricalDist d({2.0, 1.0, 0.5, 0.5});
    const double n = 4.0;
    const double total = 4.0;
    double expect = 0.0;
    for (double w : d.weights()) expect += (1.0 / n) * std::log(total / (n * w));
    const CategoricalTaskDist u4 = CategoricalTaskDist::uniform(4);
    CHECK(kl_categorical(u4, as_categorical(d)) ==
          doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("kl_gaussians closed form") {
  const DiagonalGaussian std1 = DiagonalGaussian::standard(1);
  CHECK(kl_gaussians(std1, std1) == 0.0);
  CHECK(kl_gaussians(std1, DiagonalGaussian({1.0}, {1.0})) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(kl_gaussians(std1, DiagonalGaussian({0.0}, {2.0})) ==
        doctest::Approx(std::log(2.0) + 0.125 - 0.5).epsilon(1e-14));
  CHECK_THROWS(kl_gaussians(std1, DiagonalGaussian::standard(2)));

  SUBCASE("matches 1-D quadrature on random parameters") {
    Rng rng(14);
    for (int trial = 0; trial < 12; ++trial) {
      const double mu1 = rng.uniform(-3.0, 3.0);
      const double mu2 = rng.uniform(-3.0, 3.0);
      const double s1 = rng.uniform(0.2, 5.0);
      const double s2 = rng.uniform(0.2, 5.0);
      const double closed =
          kl_gaussians(DiagonalGaussian({mu1}, {s1}), DiagonalGaussian({mu2}, {s2}));
      CHECK(closed == doctest::Approx(kl_gauss_quadrature(mu1, s1, mu2, s2))
                          .epsilon(1e-6));
    }
  }

  SUBCASE("diagonal form sums per-coordinate terms") {
    const DiagonalGaussian p({0.0, 1.0}, {1.0, 2.0});
    const DiagonalGaussian q({1.0, 1.0}, {1.0, 1.0});
    const double expect =
        kl_gaussians(DiagonalGaussian({0.0}, {1.0}), DiagonalGaussian({1.0}, {1.0})) +
        kl_gaussians(DiagonalGaussian({1.0}, {2.0}), DiagonalGaussian({1.0}, {1.0}));
    CHECK(kl_gaussians(p, q) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("as_categorical normalizes reweighted tasks") {
  CHECK_THROWS(ReweightedEmpiricalDist({1.0, 0.0}));
  CHECK_THROWS(ReweightedEmpiricalDist({1.0, -2.0}));

  const CategoricalTaskDist u = as_categorical(ReweightedEmpiricalDist({1, 1, 1, 1}));
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(u[i] == doctest::Approx(0.25).epsilon(1e-14));

  const CategoricalTaskDist q = as_categorical(ReweightedEmpiricalDist({2, 1, 1}));
  CHECK(q[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(q[2] == doctest::Approx(0.25).epsilon(1e-14));

  const CategoricalTaskDist single = as_categorical(ReweightedEmpiricalDist({5.0}));
  CHECK(single[0] == 1.0);
}

TEST_CASE("SearchPolicy softmax has full support for arbitrary finite logits") {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(6);
    const double scale = trial % 3 == 0 ? 1.0 : (trial % 3 == 1 ? 50.0 : 900.0);
    for (double& l : logits) l = scale * rng.normal();
    const SearchPolicy pi(logits);
    double sum = 0.0;
    for (double p : pi.probs()) {
      CHECK(p > 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  CHECK_THROWS(SearchPolicy({1.0, kInf}));
}

TEST_CASE("EpsilonGrid validation and defaults") {
  CHECK_THROWS(EpsilonGrid({0.1, 0.2}));
  CHECK_THROWS(EpsilonGrid({0.0, 0.2, 0.2}));
  const EpsilonGrid oos = EpsilonGrid::out_of_support_default();
  CHECK(oos.size() == 9);
  CHECK(oos[0] == 0.0);
  CHECK(oos[8] == doctest::Approx(0.8));
  const EpsilonGrid ins = EpsilonGrid::in_support_default();
  CHECK(ins.size() == 9);
  CHECK(ins[8] == doctest::Approx(0.4));
  CHECK(oos.nearest(0.34) == 3);
  CHECK(oos.nearest(-1.0) == 0);
}

TEST_CASE("Rng streams are deterministic and splittable") {
  Rng a(1234, 7);
  Rng b(1234, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng base(99);
  Rng c1 = base.split(1);
  Rng c2 = base.split(2);
  CHECK(c1.next_u64() != c2.next_u64());

  // Moment sanity for the hand-rolled samplers.
  Rng rng(5);
  const int n = 200000;
  double mean = 0.0;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);

  double bmean = 0.0;
  for (int i = 0; i < n; ++i) bmean += rng.beta(2.0, 3.0);
  CHECK(std::abs(bmean / n - 0.4) < 0.005);

  double emean = 0.0;
  for (int i = 0; i < n; ++i) emean += rng.exponential(5.0);
  CHECK(std::abs(emean / n - 0.2) < 0.005);
}
