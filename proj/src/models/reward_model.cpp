#include "metashift/models/reward_model.hpp"

#include <cmath>
#include <stdexcept>

namespace metashift {

StructuredRewardModel::StructuredRewardModel(Eigen::Index state_dim,
                                             Eigen::Index latent_dim,
                                             Eigen::VectorXd mask_in)
    : enc_weight(Eigen::MatrixXd::Zero(state_dim, latent_dim)),
      enc_bias(Eigen::VectorXd::Zero(latent_dim)),
      enc_logstd(Eigen::VectorXd::Zero(latent_dim)),
      dec_weight(Eigen::MatrixXd::Zero(latent_dim, state_dim)),
      dec_bias(Eigen::VectorXd::Zero(state_dim)),
      mask(std::move(mask_in)) {
  if (state_dim < 1 || latent_dim < 1)
    throw std::invalid_argument("StructuredRewardModel: bad dimensions");
  if (mask.size() != state_dim)
    throw std::invalid_argument("StructuredRewardModel: mask dimension");
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    if (mask(i) != 0.0 && mask(i) != 1.0)
      throw std::invalid_argument("StructuredRewardModel: mask must be 0/1");
  }
}

Eigen::VectorXd StructuredRewardModel::encode_mean(
    const Eigen::VectorXd& h_bar) const {
  return enc_weight.transpose() * h_bar + enc_bias;
}

Eigen::VectorXd StructuredRewardModel::encode_stddev() const {
  return enc_logstd.array().exp().max(sigma_floor).matrix();
}

Eigen::VectorXd StructuredRewardModel::decode(const Eigen::VectorXd& z) const {
  return dec_weight.transpose() * z + dec_bias;
}

Eigen::Index StructuredRewardModel::param_count() const {
  return enc_weight.size() + enc_bias.size() + enc_logstd.size() +
         dec_weight.size() + dec_bias.size() + 1;
}

Eigen::VectorXd StructuredRewardModel::flat_params() const {
  Eigen::VectorXd theta(param_count());
  Eigen::Index k = 0;
  auto put = [&](const double* data, Eigen::Index n) {
    theta.segment(k, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
    k += n;
  };
  put(enc_weight.data(), enc_weight.size());
  put(enc_bias.data(), enc_bias.size());
  put(enc_logstd.data(), enc_logstd.size());
  put(dec_weight.data(), dec_weight.size());
  put(dec_bias.data(), dec_bias.size());
  theta(k++) = log_sigma;
  return theta;
}

void StructuredRewardModel::set_flat_params(const Eigen::VectorXd& theta) {
  if (theta.size() != param_count())
    throw std::invalid_argument("set_flat_params: wrong length");
  Eigen::Index k = 0;
  auto take = [&](double* data, Eigen::Index n) {
    Eigen::Map<Eigen::VectorXd>(data, n) = theta.segment(k, n);
    k += n;
  };
  take(enc_weight.data(), enc_weight.size());
  take(enc_bias.data(), enc_bias.size());
  take(enc_logstd.data(), enc_logstd.size());
  take(dec_weight.data(), dec_weight.size());
  take(dec_bias.data(), dec_bias.size());
  log_sigma = theta(k++);
}

void StructuredRewardModel::random_init(Rng& rng, double scale) {
  auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * rng.normal();
  };
  fill(enc_weight);
  fill(dec_weight);
  for (Eigen::Index i = 0; i < enc_bias.size(); ++i)
    enc_bias(i) = scale * rng.normal();
  for (Eigen::Index i = 0; i < enc_logstd.size(); ++i)
    enc_logstd(i) = -0.5 + 0.3 * rng.normal();
  for (Eigen::Index i = 0; i < dec_bias.size(); ++i)
    dec_bias(i) = scale * rng.normal();
  log_sigma = -0.5 + 0.3 * rng.normal();
}

double reward_predict(const Eigen::VectorXd& s, const Eigen::VectorXd& h_hat,
                      const StructuredRewardModel& model) {
  if (s.size() != model.state_dim() || h_hat.size() != model.state_dim())
    throw std::invalid_argument("reward_predict: dimension mismatch");
  const double sigma = std::max(std::exp(model.log_sigma), model.sigma_floor);
  const double u = (model.mask.array() * (s - h_hat).array()).square().sum();
  return std::exp(-u / (sigma * sigma));
}

ElboResult elbo_reward(const StructuredRewardModel& model,
                       const std::vector<Trajectory>& batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("elbo_reward: empty batch");

  const Eigen::Index n = model.state_dim();
  const Eigen::Index d = model.latent_dim();
  const double sigma = std::max(std::exp(model.log_sigma), model.sigma_floor);
  const bool sigma_clamped = std::exp(model.log_sigma) < model.sigma_floor;
  const Eigen::VectorXd sz = model.encode_stddev();
  Eigen::ArrayXd sz_clamped(d);
  for (Eigen::Index j = 0; j < d; ++j)
    sz_clamped(j) = std::exp(model.enc_logstd(j)) < model.sigma_floor ? 1.0 : 0.0;

  double loss = 0.0;
  int used = 0;
  int skipped = 0;

  Eigen::MatrixXd g_enc_w = Eigen::MatrixXd::Zero(n, d);
  Eigen::VectorXd g_enc_b = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g_enc_ls = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd g_dec_w = Eigen::MatrixXd::Zero(d, n);
  Eigen::VectorXd g_dec_b = Eigen::VectorXd::Zero(n);
  double g_log_sigma = 0.0;

  for (const Trajectory& traj : batch) {
    if (traj.state_dim() != n)
      throw std::invalid_argument("elbo_reward: trajectory dimension");
    const auto h_bar_opt = goal_summary(traj);
    if (!h_bar_opt) {
      ++skipped;
      continue;
    }
    const Eigen::VectorXd& h_bar = *h_bar_opt;
    ++used;

    Eigen::VectorXd eta(d);
    for (Eigen::Index j = 0; j < d; ++j) eta(j) = rng.normal();

    const Eigen::VectorXd mu = model.encode_mean(h_bar);
    const Eigen::VectorXd z = mu + sz.cwiseProduct(eta);
    const Eigen::VectorXd h_hat = model.decode(z);

    const Eigen::VectorXd recon_err = h_hat - h_bar;
    loss += recon_err.squaredNorm();
    Eigen::VectorXd d_h_hat = 2.0 * recon_err;

    for (Eigen::Index t = 0; t < traj.length(); ++t) {
      const Eigen::VectorXd s_t = traj.states.row(t).transpose();
      const Eigen::ArrayXd masked = model.mask.array() * (s_t - h_hat).array();
      const double u = masked.square().sum();
      const double r_hat = std::exp(-u / (sigma * sigma));
      const double err = r_hat - traj.rewards(t);
      loss += err * err;
      const double w = 2.0 * err * r_hat;
      // d r_hat / d h_hat = r_hat * (2/sigma^2) * mask.(s - h_hat)
      d_h_hat += (w * 2.0 / (sigma * sigma)) * masked.matrix();
      if (!sigma_clamped) g_log_sigma += w * 2.0 * u / (sigma * sigma);
    }

    g_dec_w += z * d_h_hat.transpose();
    g_dec_b += d_h_hat;
    Eigen::VectorXd d_z = model.dec_weight * d_h_hat;

    // KL(N(mu, sz^2) || N(0, I))
    for (Eigen::Index j = 0; j < d; ++j)
      loss += 0.5 * (mu(j) * mu(j) + sz(j) * sz(j) - 1.0) - std::log(sz(j));

    const Eigen::VectorXd d_mu = d_z + mu;
    const Eigen::VectorXd d_sz =
        d_z.cwiseProduct(eta) + (sz.array() - sz.array().inverse()).matrix();
    g_enc_w += h_bar * d_mu.transpose();
    g_enc_b += d_mu;
    g_enc_ls +=
        (d_sz.array() * sz.array() * (1.0 - sz_clamped)).matrix();
  }

  if (used == 0)
    throw std::invalid_argument("elbo_reward: no trajectory had positive reward");

  const double inv = 1.0 / static_cast<double>(used);
  ElboResult out;
  out.loss = loss * inv;
  out.skipped = skipped;
  out.grad.resize(model.param_count());
  Eigen::Index k = 0;
  auto put = [&](const Eigen::MatrixXd& m) {
    out.grad.segment(k, m.size()) =
        Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()) * inv;
    k += m.size();
  };
  auto putv = [&](const Eigen::VectorXd& v) {
    out.grad.segment(k, v.size()) = v * inv;
    k += v.size();
  };
  put(g_enc_w);
  putv(g_enc_b);
  putv(g_enc_ls);
  put(g_dec_w);
  putv(g_dec_b);
  out.grad(k++) = g_log_sigma * inv;
  return out;
}

std::vector<Eigen::VectorXd> imagine_goals(const StructuredRewardModel& model,
                                           const DiagonalGaussian& q_phi,
                                           int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("imagine_goals: n must be >= 1");
  if (static_cast<Eigen::Index>(q_phi.dim()) != model.latent_dim())
    throw std::invalid_argument("imagine_goals: latent dimension mismatch");
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::vector<double> z = q_phi.sample(rng);
    out.push_back(model.decode(
        Eigen::Map<const Eigen::VectorXd>(z.data(), model.latent_dim())));
  }
  return out;
}

}  // namespace metashift
