#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "metashift/models/checkpoint.hpp"
#include "metashift/models/dynamics_model.hpp"
#include "metashift/models/reward_model.hpp"
#include "metashift/models/trajectory.hpp"

using namespace metashift;

namespace {

Trajectory make_traj(const std::vector<std::vector<double>>& states,
                     const std::vector<double>& rewards) {
  const Eigen::Index T = static_cast<Eigen::Index>(states.size());
  const Eigen::Index n = static_cast<Eigen::Index>(states[0].size());
  Eigen::MatrixXd s(T, n);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index i = 0; i < n; ++i)
      s(t, i) = states[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(T, 1);
  Eigen::VectorXd r(T);
  for (Eigen::Index t = 0; t < T; ++t) r(t) = rewards[static_cast<std::size_t>(t)];
  return Trajectory(std::move(s), std::move(a), std::move(r));
}

std::vector<Trajectory> random_batch(int n_traj, int T, int state_dim,
                                     int action_dim, Rng& rng,
                                     bool ensure_reward) {
  std::vector<Trajectory> batch;
  for (int i = 0; i < n_traj; ++i) {
    Eigen::MatrixXd s(T, state_dim);
    Eigen::MatrixXd a(T, action_dim);
    Eigen::VectorXd r(T);
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < state_dim; ++j) s(t, j) = rng.normal();
      for (int j = 0; j < action_dim; ++j) a(t, j) = rng.normal();
      r(t) = rng.uniform() < 0.4 ? 1.0 : 0.0;
    }
    if (ensure_reward) r(T - 1) = 1.0;
    batch.emplace_back(std::move(s), std::move(a), std::move(r));
  }
  return batch;
}

// Central finite differences of a loss functional over flat parameters.
template <class Model, class LossFn>
double max_grad_rel_error(Model model, const LossFn& loss_of,
                          const Eigen::VectorXd& analytic, double step) {
  const Eigen::VectorXd theta = model.flat_params();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd up = theta;
    Eigen::VectorXd dn = theta;
    up(i) += step;
    dn(i) -= step;
    model.set_flat_params(up);
    const double lu = loss_of(model);
    model.set_flat_params(dn);
    const double ld = loss_of(model);
    const double fd = (lu - ld) / (2.0 * step);
    const double scale = std::max({std::abs(fd), std::abs(analytic(i)), 1e-6});
    worst = std::max(worst, std::abs(fd - analytic(i)) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("goal_summary is the reward-weighted state mean") {
  SUBCASE("two rewarded states average") {
    const Trajectory t = make_traj({{0, 0}, {1, 0}, {0, 3}}, {0, 1, 1});
    const auto h = goal_summary(t);
    REQUIRE(h.has_value());
    CHECK((*h)(0) == doctest::Approx(0.5));
    CHECK((*h)(1) == doctest::Approx(1.5));
  }
  SUBCASE("no positive reward means no summary") {
    CHECK(!goal_summary(make_traj({{1, 1}, {2, 2}}, {0, 0})).has_value());
  }
  SUBCASE("single rewarded state is returned exactly") {
    const Trajectory t = make_traj({{1, 1}, {4, -2}}, {0, 1});
    const auto h = goal_summary(t);
    REQUIRE(h.has_value());
    CHECK((*h)(0) == 4.0);
    CHECK((*h)(1) == -2.0);
  }
  SUBCASE("negative rewards are rejected") {
    CHECK_THROWS(goal_summary(make_traj({{0, 0}}, {-1})));
  }
}

TEST_CASE("reward_predict masked squared-exponential") {
  StructuredRewardModel model(2, 3, Eigen::VectorXd::Ones(2));
  model.log_sigma = 0.0;  // sigma = 1
  Eigen::VectorXd h(2);
  h << 0.3, -0.2;

  CHECK(reward_predict(h, h, model) == doctest::Approx(1.0));

  SUBCASE("all-zero mask predicts 1 everywhere") {
    StructuredRewardModel masked(2, 3, Eigen::VectorXd::Zero(2));
    Eigen::VectorXd far(2);
    far << 100.0, -50.0;
    CHECK(reward_predict(far, h, masked) == doctest::Approx(1.0));
  }
  SUBCASE("unit residual gives 1/e") {
    Eigen::VectorXd s(2);
    s << 0.3 + 1.0, -0.2;
    CHECK(reward_predict(s, h, model) == doctest::Approx(std::exp(-1.0)));
  }
  SUBCASE("monotone non-increasing in the masked distance") {
    double prev = 1.0;
    for (double d = 0.0; d <= 3.0; d += 0.1) {
      Eigen::VectorXd s(2);
      s << 0.3 + d, -0.2;
      const double r = reward_predict(s, h, model);
      CHECK(r <= prev + 1e-15);
      CHECK(r > 0.0);
      CHECK(r <= 1.0);
      prev = r;
    }
  }
}

TEST_CASE("elbo_reward value structure") {
  SUBCASE("posterior equal to the prior contributes zero KL") {
    // Zero encoder weights/bias and logstd 0 make q(z|h) = N(0, I); mask 0
    // makes every predicted reward 1, and h_bar = 0 = decode(z never
    // mattering through the zero decoder weights... recon term vanishes.
    StructuredRewardModel model(2, 2, Eigen::VectorXd::Zero(2));
    model.log_sigma = 0.0;
    Rng rng(1);
    const Trajectory t = make_traj({{0, 0}, {0, 0}}, {1, 1});
    const ElboResult res = elbo_reward(model, {t}, rng);
    CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("perfect reconstruction and matched rewards give zero loss") {
    StructuredRewardModel model(2, 2, Eigen::VectorXd::Ones(2));
    model.log_sigma = 0.0;
    // Goal at the origin; rewarded state at the origin, unrewarded state far
    // away (squared-exponential is ~3.7e-44 there).
    const Trajectory t = make_traj({{0, 0}, {10, 0}}, {1, 0});
    Rng rng(2);
    const ElboResult res = elbo_reward(model, {t}, rng);
    CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("trajectories without a goal summary are skipped and counted") {
    StructuredRewardModel model(2, 2, Eigen::VectorXd::Ones(2));
    Rng rng(3);
    const Trajectory good = make_traj({{0, 0}, {1, 1}}, {0, 1});
    const Trajectory empty = make_traj({{0, 0}, {1, 1}}, {0, 0});
    const ElboResult res = elbo_reward(model, {good, empty}, rng);
    CHECK(res.skipped == 1);
    CHECK_THROWS(elbo_reward(model, {empty}, rng));
    CHECK_THROWS(elbo_reward(model, {}, rng));
  }
}

TEST_CASE("elbo_reward gradient passes finite differences") {
  Rng data_rng(4);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    StructuredRewardModel model(3, 2, (Eigen::VectorXd(3) << 1, 1, 0).finished());
    Rng init = data_rng.split(100 + static_cast<std::uint64_t>(draw));
    model.random_init(init);
    const std::vector<Trajectory> batch = random_batch(3, 4, 3, 1, data_rng, true);
    const std::uint64_t eta_seed = 5000 + static_cast<std::uint64_t>(draw);

    Rng eta(eta_seed);
    const ElboResult res = elbo_reward(model, batch, eta);
    auto loss_of = [&](const StructuredRewardModel& m) {
      Rng fixed(eta_seed);
      return elbo_reward(m, batch, fixed).loss;
    };
    worst = std::max(worst, max_grad_rel_error(model, loss_of, res.grad, 1e-5));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("posterior-to-prior KL term is nonnegative, zero only at the prior") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const double mu = rng.uniform(-2.0, 2.0);
    const double sd = rng.uniform(0.2, 3.0);
    const double kl = 0.5 * (mu * mu + sd * sd - 1.0) - std::log(sd);
    CHECK(kl >= -1e-12);
    if (std::abs(mu) > 1e-3 || std::abs(sd - 1.0) > 1e-3) CHECK(kl > 0.0);
  }
}

TEST_CASE("dynamics_predict additive decomposition") {
  StructuredDynamicsModel model(2, 1, 2);
  model.base_weight.setZero();
  model.base_weight(0, 0) = 1.0;  // next_x = x
  model.base_weight(1, 1) = 1.0;  // next_y = y
  model.base_weight(2, 0) = 0.5;  // + 0.5 * action into x
  model.base_bias << 0.1, -0.1;

  Eigen::VectorXd s(2), a(1), z(2);
  s << 1.0, 2.0;
  a << 1.0;

  SUBCASE("zero latent gives the base map") {
    z << 0.0, 0.0;
    const Eigen::VectorXd next = dynamics_predict(s, a, z, model);
    CHECK(next(0) == doctest::Approx(1.6));
    CHECK(next(1) == doctest::Approx(1.9));
  }
  SUBCASE("zero shift weight ignores the latent") {
    z << 3.0, -4.0;
    const Eigen::VectorXd next = dynamics_predict(s, a, z, model);
    CHECK(next(0) == doctest::Approx(1.6));
    CHECK(next(1) == doctest::Approx(1.9));
  }
  SUBCASE("identity-column shift adds the latent coordinate") {
    model.shift_weight.setZero();
    model.shift_weight(0, 0) = 1.0;
    model.shift_weight(1, 0) = 1.0;
    z << 0.1, 0.0;
    const Eigen::VectorXd next = dynamics_predict(s, a, z, model);
    CHECK(next(0) == doctest::Approx(1.7));
    CHECK(next(1) == doctest::Approx(2.0));
  }
  SUBCASE("dimension mismatches throw") {
    Eigen::VectorXd bad(3);
    bad.setZero();
    z << 0.0, 0.0;
    CHECK_THROWS(dynamics_predict(bad, a, z, model));
  }
}

TEST_CASE("elbo_dynamics value structure") {
  SUBCASE("exact base map, zero shift, prior posterior: zero loss") {
    StructuredDynamicsModel model(1, 1, 1);
    model.base_weight(0, 0) = 1.0;  // s' = s for the constant trajectory
    Rng rng(7);
    Eigen::MatrixXd s(3, 1);
    s << 1.0, 1.0, 1.0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 1);
    const Trajectory t(s, a, Eigen::VectorXd::Zero(3));
    const ElboResult res = elbo_dynamics(model, {t}, rng);
    CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("hand-built shifted transition reconstructs through W z") {
    // s' = base(s,a) + W z with W = [[1]], posterior mean 1 and tiny sigma.
    StructuredDynamicsModel model(1, 1, 1);
    model.base_weight(0, 0) = 1.0;
    model.shift_weight(0, 0) = 1.0;
    model.enc_bias << 1.0;      // posterior mean 1 regardless of input
    model.enc_logstd << -14.0;  // sigma clamps to the 1e-4 floor
    Eigen::MatrixXd s(2, 1);
    s << 1.0, 2.0;  // transition 1 -> 2 = base(1) + 1
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 1);
    const Trajectory t(s, a, Eigen::VectorXd::Zero(2));
    Rng rng(8);
    const ElboResult res = elbo_dynamics(model, {t}, rng);
    // KL(N(1, 1e-4) || N(0,1)) dominates; subtracting isolates the recon.
    const double kl = 0.5 * (1.0 + 1e-8 - 1.0) - std::log(1e-4);
    CHECK(res.loss - kl == doctest::Approx(0.0).epsilon(1e-6));
  }
  SUBCASE("single-state trajectories are skipped") {
    StructuredDynamicsModel model(1, 1, 1);
    Eigen::MatrixXd s(1, 1);
    s << 1.0;
    const Trajectory t(s, Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1));
    Rng rng(9);
    CHECK_THROWS(elbo_dynamics(model, {t}, rng));
  }
}

TEST_CASE("elbo_dynamics gradient passes finite differences") {
  Rng data_rng(10);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    StructuredDynamicsModel model(2, 1, 2);
    Rng init = data_rng.split(200 + static_cast<std::uint64_t>(draw));
    model.random_init(init);
    const std::vector<Trajectory> batch = random_batch(3, 4, 2, 1, data_rng, false);
    const std::uint64_t eta_seed = 6000 + static_cast<std::uint64_t>(draw);

    Rng eta(eta_seed);
    const ElboResult res = elbo_dynamics(model, batch, eta);
    auto loss_of = [&](const StructuredDynamicsModel& m) {
      Rng fixed(eta_seed);
      return elbo_dynamics(m, batch, fixed).loss;
    };
    worst = std::max(worst, max_grad_rel_error(model, loss_of, res.grad, 1e-5));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("imagine_goals decodes latent draws") {
  StructuredRewardModel model(2, 2, Eigen::VectorXd::Ones(2));
  model.dec_weight << 1.0, 0.0, 0.0, 1.0;  // identity decoder

  SUBCASE("near point mass decodes to the decoded mean") {
    const DiagonalGaussian q({0.7, -0.3}, {1e-9, 1e-9});
    Rng rng(11);
    const auto tasks = imagine_goals(model, q, 5, rng);
    for (const Eigen::VectorXd& h : tasks) {
      CHECK(h(0) == doctest::Approx(0.7).epsilon(1e-6));
      CHECK(h(1) == doctest::Approx(-0.3).epsilon(1e-6));
    }
  }
  SUBCASE("prior draws concentrate around zero as n grows") {
    const DiagonalGaussian q = DiagonalGaussian::standard(2);
    Rng rng(12);
    const int n = 4096;
    const auto tasks = imagine_goals(model, q, n, rng);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (const Eigen::VectorXd& h : tasks) mean += h;
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean(0)) <= 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(mean(1)) <= 4.0 / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("zero samples is a precondition violation") {
    Rng rng(13);
    CHECK_THROWS(imagine_goals(model, DiagonalGaussian::standard(2), 0, rng));
  }
  SUBCASE("deterministic under the seed") {
    Rng a(14), b(14);
    const auto t1 = imagine_goals(model, DiagonalGaussian::standard(2), 8, a);
    const auto t2 = imagine_goals(model, DiagonalGaussian::standard(2), 8, b);
    for (std::size_t i = 0; i < 8; ++i) CHECK(t1[i] == t2[i]);
  }
  SUBCASE("dynamics shifts are W z") {
    StructuredDynamicsModel dyn(2, 1, 2);
    dyn.shift_weight << 2.0, 0.0, 0.0, 1.0;
    const DiagonalGaussian q({1.0, -1.0}, {1e-9, 1e-9});
    Rng rng(15);
    const auto shifts = imagine_shifts(dyn, q, 3, rng);
    for (const Eigen::VectorXd& w : shifts) {
      CHECK(w(0) == doctest::Approx(2.0).epsilon(1e-6));
      CHECK(w(1) == doctest::Approx(-1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("training a reward model on synthetic data recovers reconstruction") {
  // Generator: true goals h ~ N(0, I); the rewarded state observes the goal
  // through N(0, 0.25^2 I) noise, plus two unrewarded far states. The noise
  // floor for recovering the true goal from the summary is E||xi||, and the
  // trained model must land within twice it on held-out tasks.
  Rng rng(15);
  const int state_dim = 2;
  const double noise = 0.25;
  const double goal_scale = 2.0;
  std::vector<Trajectory> train;
  std::vector<Trajectory> held_out;
  std::vector<Eigen::VectorXd> held_out_goals;
  for (int i = 0; i < 100; ++i) {
    Eigen::MatrixXd s(3, state_dim);
    Eigen::VectorXd r(3);
    Eigen::VectorXd goal(state_dim);
    goal << goal_scale * rng.normal(), goal_scale * rng.normal();
    const double ox = goal(0) + noise * rng.normal();
    const double oy = goal(1) + noise * rng.normal();
    s << ox, oy, ox + 8.0, oy - 8.0, ox - 8.0, oy + 8.0;
    r << 1.0, 0.0, 0.0;
    Trajectory t(s, Eigen::MatrixXd::Zero(3, 1), r);
    if (i < 70) {
      train.push_back(std::move(t));
    } else {
      held_out.push_back(std::move(t));
      held_out_goals.push_back(goal);
    }
  }

  StructuredRewardModel model(state_dim, 2, Eigen::VectorXd::Ones(state_dim));
  Rng init(16);
  model.random_init(init, 0.1);
  model.log_sigma = 0.0;

  for (int it = 0; it < 4000; ++it) {
    Rng eta(static_cast<std::uint64_t>(17 + it));
    const ElboResult res = elbo_reward(model, train, eta);
    Eigen::VectorXd theta = model.flat_params();
    theta -= 0.02 * res.grad;
    model.set_flat_params(theta);
  }

  double err = 0.0;
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    const Eigen::VectorXd h = *goal_summary(held_out[i]);
    const Eigen::VectorXd rec = model.decode(model.encode_mean(h));
    err += (rec - held_out_goals[i]).norm();
  }
  err /= static_cast<double>(held_out.size());
  const double floor = noise * std::sqrt(M_PI / 2.0);  // E||N(0, s^2 I_2)||
  CHECK(err <= 2.0 * floor);
}

TEST_CASE("checkpoint container round-trips doubles exactly") {
  const std::string path = "checkpoint_roundtrip_test.ckpt";
  std::vector<NamedArray> arrays;
  Rng rng(18);
  std::vector<double> v;
  for (int i = 0; i < 37; ++i)
    v.push_back(rng.normal() * std::pow(10.0, static_cast<double>(i % 17) - 8));
  v.push_back(0.1 + 0.2);
  arrays.push_back({"weights", v});
  arrays.push_back({"scalar", {-1.0}});
  save_checkpoint(path, arrays);
  const auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "weights");
  REQUIRE(loaded[0].values.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(loaded[0].values[i] == v[i]);
  CHECK(find_array(loaded, "scalar").at(0) == -1.0);
  CHECK_THROWS(find_array(loaded, "missing"));
  CHECK_THROWS(save_checkpoint(path, {{"bad name", {1.0}}}));
  std::filesystem::remove(path);
}
