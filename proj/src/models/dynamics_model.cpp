#include "metashift/models/dynamics_model.hpp"

#include <cmath>
#include <stdexcept>

namespace metashift {

StructuredDynamicsModel::StructuredDynamicsModel(Eigen::Index state_dim,
                                                 Eigen::Index action_dim,
                                                 Eigen::Index latent_dim)
    : enc_weight(Eigen::MatrixXd::Zero(state_dim + action_dim, latent_dim)),
      enc_bias(Eigen::VectorXd::Zero(latent_dim)),
      enc_logstd(Eigen::VectorXd::Zero(latent_dim)),
      base_weight(Eigen::MatrixXd::Zero(state_dim + action_dim, state_dim)),
      base_bias(Eigen::VectorXd::Zero(state_dim)),
      shift_weight(Eigen::MatrixXd::Zero(state_dim, latent_dim)) {
  if (state_dim < 1 || action_dim < 1 || latent_dim < 1)
    throw std::invalid_argument("StructuredDynamicsModel: bad dimensions");
}

Eigen::VectorXd StructuredDynamicsModel::encode_mean(
    const Trajectory& traj) const {
  Eigen::VectorXd pooled =
      Eigen::VectorXd::Zero(state_dim() + action_dim());
  for (Eigen::Index t = 0; t < traj.length(); ++t) {
    pooled.head(state_dim()) += traj.states.row(t).transpose();
    pooled.tail(action_dim()) += traj.actions.row(t).transpose();
  }
  pooled /= static_cast<double>(traj.length());
  return enc_weight.transpose() * pooled + enc_bias;
}

Eigen::VectorXd StructuredDynamicsModel::encode_stddev() const {
  return enc_logstd.array().exp().max(sigma_floor).matrix();
}

Eigen::VectorXd StructuredDynamicsModel::base(const Eigen::VectorXd& s,
                                              const Eigen::VectorXd& a) const {
  Eigen::VectorXd x(state_dim() + action_dim());
  x.head(state_dim()) = s;
  x.tail(action_dim()) = a;
  return base_weight.transpose() * x + base_bias;
}

Eigen::Index StructuredDynamicsModel::param_count() const {
  return enc_weight.size() + enc_bias.size() + enc_logstd.size() +
         base_weight.size() + base_bias.size() + shift_weight.size();
}

Eigen::VectorXd StructuredDynamicsModel::flat_params() const {
  Eigen::VectorXd theta(param_count());
  Eigen::Index k = 0;
  auto put = [&](const double* data, Eigen::Index n) {
    theta.segment(k, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
    k += n;
  };
  put(enc_weight.data(), enc_weight.size());
  put(enc_bias.data(), enc_bias.size());
  put(enc_logstd.data(), enc_logstd.size());
  put(base_weight.data(), base_weight.size());
  put(base_bias.data(), base_bias.size());
  put(shift_weight.data(), shift_weight.size());
  return theta;
}

void StructuredDynamicsModel::set_flat_params(const Eigen::VectorXd& theta) {
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
  take(base_weight.data(), base_weight.size());
  take(base_bias.data(), base_bias.size());
  take(shift_weight.data(), shift_weight.size());
}

void StructuredDynamicsModel::random_init(Rng& rng, double scale) {
  auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * rng.normal();
  };
  fill(enc_weight);
  fill(base_weight);
  fill(shift_weight);
  for (Eigen::Index i = 0; i < enc_bias.size(); ++i)
    enc_bias(i) = scale * rng.normal();
  for (Eigen::Index i = 0; i < enc_logstd.size(); ++i)
    enc_logstd(i) = -0.5 + 0.3 * rng.normal();
  for (Eigen::Index i = 0; i < base_bias.size(); ++i)
    base_bias(i) = scale * rng.normal();
}

Eigen::VectorXd dynamics_predict(const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& z,
                                 const StructuredDynamicsModel& model) {
  if (s.size() != model.state_dim() || a.size() != model.action_dim() ||
      z.size() != model.latent_dim())
    throw std::invalid_argument("dynamics_predict: dimension mismatch");
  return model.base(s, a) + model.shift_weight * z;
}

ElboResult elbo_dynamics(const StructuredDynamicsModel& model,
                         const std::vector<Trajectory>& batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("elbo_dynamics: empty batch");

  const Eigen::Index n = model.state_dim();
  const Eigen::Index m = model.action_dim();
  const Eigen::Index d = model.latent_dim();
  const Eigen::VectorXd sz = model.encode_stddev();
  Eigen::ArrayXd sz_clamped(d);
  for (Eigen::Index j = 0; j < d; ++j)
    sz_clamped(j) = std::exp(model.enc_logstd(j)) < model.sigma_floor ? 1.0 : 0.0;

  double loss = 0.0;
  int used = 0;
  int skipped = 0;

  Eigen::MatrixXd g_enc_w = Eigen::MatrixXd::Zero(n + m, d);
  Eigen::VectorXd g_enc_b = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g_enc_ls = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd g_base_w = Eigen::MatrixXd::Zero(n + m, n);
  Eigen::VectorXd g_base_b = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd g_shift = Eigen::MatrixXd::Zero(n, d);

  for (const Trajectory& traj : batch) {
    if (traj.state_dim() != n || traj.action_dim() != m)
      throw std::invalid_argument("elbo_dynamics: trajectory dimension");
    if (traj.length() < 2) {
      ++skipped;
      continue;
    }
    ++used;

    Eigen::VectorXd eta(d);
    for (Eigen::Index j = 0; j < d; ++j) eta(j) = rng.normal();

    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(n + m);
    for (Eigen::Index t = 0; t < traj.length(); ++t) {
      pooled.head(n) += traj.states.row(t).transpose();
      pooled.tail(m) += traj.actions.row(t).transpose();
    }
    pooled /= static_cast<double>(traj.length());

    const Eigen::VectorXd mu = model.enc_weight.transpose() * pooled + model.enc_bias;
    const Eigen::VectorXd z = mu + sz.cwiseProduct(eta);
    const Eigen::VectorXd shift = model.shift_weight * z;

    Eigen::VectorXd d_z = Eigen::VectorXd::Zero(d);
    for (Eigen::Index t = 0; t + 1 < traj.length(); ++t) {
      Eigen::VectorXd x(n + m);
      x.head(n) = traj.states.row(t).transpose();
      x.tail(m) = traj.actions.row(t).transpose();
      const Eigen::VectorXd pred =
          model.base_weight.transpose() * x + model.base_bias + shift;
      const Eigen::VectorXd err = pred - traj.states.row(t + 1).transpose();
      loss += err.squaredNorm();
      const Eigen::VectorXd d_pred = 2.0 * err;
      g_base_w += x * d_pred.transpose();
      g_base_b += d_pred;
      g_shift += d_pred * z.transpose();
      d_z += model.shift_weight.transpose() * d_pred;
    }

    for (Eigen::Index j = 0; j < d; ++j)
      loss += 0.5 * (mu(j) * mu(j) + sz(j) * sz(j) - 1.0) - std::log(sz(j));

    const Eigen::VectorXd d_mu = d_z + mu;
    const Eigen::VectorXd d_sz =
        d_z.cwiseProduct(eta) + (sz.array() - sz.array().inverse()).matrix();
    g_enc_w += pooled * d_mu.transpose();
    g_enc_b += d_mu;
    g_enc_ls += (d_sz.array() * sz.array() * (1.0 - sz_clamped)).matrix();
  }

  if (used == 0)
    throw std::invalid_argument("elbo_dynamics: no trajectory had transitions");

  const double inv = 1.0 / static_cast<double>(used);
  ElboResult out;
  out.loss = loss * inv;
  out.skipped = skipped;
  out.grad.resize(model.param_count());
  Eigen::Index k = 0;
  auto put = [&](const Eigen::MatrixXd& mat) {
    out.grad.segment(k, mat.size()) =
        Eigen::Map<const Eigen::VectorXd>(mat.data(), mat.size()) * inv;
    k += mat.size();
  };
  auto putv = [&](const Eigen::VectorXd& v) {
    out.grad.segment(k, v.size()) = v * inv;
    k += v.size();
  };
  put(g_enc_w);
  putv(g_enc_b);
  putv(g_enc_ls);
  put(g_base_w);
  putv(g_base_b);
  put(g_shift);
  return out;
}

std::vector<Eigen::VectorXd> imagine_shifts(const StructuredDynamicsModel& model,
                                            const DiagonalGaussian& q_phi,
                                            int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("imagine_shifts: n must be >= 1");
  if (static_cast<Eigen::Index>(q_phi.dim()) != model.latent_dim())
    throw std::invalid_argument("imagine_shifts: latent dimension mismatch");
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::vector<double> z = q_phi.sample(rng);
    out.push_back(model.shift_weight *
                  Eigen::Map<const Eigen::VectorXd>(z.data(), model.latent_dim()));
  }
  return out;
}

}  // namespace metashift
