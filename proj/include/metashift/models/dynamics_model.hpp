#pragma once

#include <Eigen/Core>
#include <vector>

#include "metashift/core/distributions.hpp"
#include "metashift/core/rng.hpp"
#include "metashift/models/reward_model.hpp"
#include "metashift/models/trajectory.hpp"

namespace metashift {

// Latent task model for dynamics variation. Tasks share an affine base
// transition map and differ by an additive shift W z; the encoder pools the
// state-action sequence (mean over time) through an affine map.
struct StructuredDynamicsModel {
  Eigen::MatrixXd enc_weight;    // (state_dim + action_dim) x latent_dim
  Eigen::VectorXd enc_bias;      // latent_dim
  Eigen::VectorXd enc_logstd;    // latent_dim
  Eigen::MatrixXd base_weight;   // (state_dim + action_dim) x state_dim
  Eigen::VectorXd base_bias;     // state_dim
  Eigen::MatrixXd shift_weight;  // state_dim x latent_dim
  double sigma_floor = 1e-4;

  StructuredDynamicsModel(Eigen::Index state_dim, Eigen::Index action_dim,
                          Eigen::Index latent_dim);

  Eigen::Index state_dim() const { return shift_weight.rows(); }
  Eigen::Index action_dim() const { return enc_weight.rows() - state_dim(); }
  Eigen::Index latent_dim() const { return enc_weight.cols(); }

  Eigen::VectorXd encode_mean(const Trajectory& traj) const;
  Eigen::VectorXd encode_stddev() const;
  Eigen::VectorXd base(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const;

  // Flattened learned parameters: enc_weight (column-major), enc_bias,
  // enc_logstd, base_weight (column-major), base_bias, shift_weight
  // (column-major).
  Eigen::Index param_count() const;
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& theta);

  void random_init(Rng& rng, double scale = 0.3);
};

// base(s, a) + W z.
Eigen::VectorXd dynamics_predict(const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& z,
                                 const StructuredDynamicsModel& model);

// Negative ELBO over transitions: sum_t ||base(s_t, a_t) + W z - s_{t+1}||^2
// plus the posterior-to-prior KL, averaged over trajectories with at least
// one transition. One reparameterization draw per trajectory.
ElboResult elbo_dynamics(const StructuredDynamicsModel& model,
                         const std::vector<Trajectory>& batch, Rng& rng);

// Additive dynamics shifts W z for n latent draws from q_phi.
std::vector<Eigen::VectorXd> imagine_shifts(const StructuredDynamicsModel& model,
                                            const DiagonalGaussian& q_phi,
                                            int n, Rng& rng);

}  // namespace metashift
