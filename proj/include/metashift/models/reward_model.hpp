#pragma once

#include <Eigen/Core>
#include <vector>

#include "metashift/core/distributions.hpp"
#include "metashift/core/rng.hpp"
#include "metashift/models/trajectory.hpp"

namespace metashift {

// Latent task model for reward variation. An affine encoder maps the goal
// summary of a trajectory to a Gaussian posterior over latent codes; an
// affine decoder maps codes back to a goal estimate; the reward head scores
// states against the decoded goal through a masked squared-exponential.
//
// All learned standard deviations are floored at sigma_floor; gradients are
// zero on a floored coordinate.
struct StructuredRewardModel {
  Eigen::MatrixXd enc_weight;  // state_dim x latent_dim
  Eigen::VectorXd enc_bias;    // latent_dim
  Eigen::VectorXd enc_logstd;  // latent_dim
  Eigen::MatrixXd dec_weight;  // latent_dim x state_dim
  Eigen::VectorXd dec_bias;    // state_dim
  Eigen::VectorXd mask;        // state_dim, entries in {0,1}; fixed, not learned
  double log_sigma = -5.0;     // reward head width, learned
  double sigma_floor = 1e-4;

  StructuredRewardModel(Eigen::Index state_dim, Eigen::Index latent_dim,
                        Eigen::VectorXd mask_in);

  Eigen::Index state_dim() const { return enc_weight.rows(); }
  Eigen::Index latent_dim() const { return enc_weight.cols(); }

  Eigen::VectorXd encode_mean(const Eigen::VectorXd& h_bar) const;
  Eigen::VectorXd encode_stddev() const;  // floored
  Eigen::VectorXd decode(const Eigen::VectorXd& z) const;

  // Flattened learned parameters, in the order enc_weight (column-major),
  // enc_bias, enc_logstd, dec_weight (column-major), dec_bias, log_sigma.
  Eigen::Index param_count() const;
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& theta);

  void random_init(Rng& rng, double scale = 0.3);
};

// exp(-||mask . (s - h_hat)||^2 / sigma^2), in (0, 1].
double reward_predict(const Eigen::VectorXd& s, const Eigen::VectorXd& h_hat,
                      const StructuredRewardModel& model);

struct ElboResult {
  double loss = 0.0;
  Eigen::VectorXd grad;
  int skipped = 0;  // trajectories without a goal summary (reward model)
                    // or without transitions (dynamics model)
};

// Negative evidence lower bound for a batch: goal-summary reconstruction,
// per-step reward prediction error and posterior-to-prior KL, averaged over
// usable trajectories. One reparameterization draw per trajectory, taken
// from rng in batch order, so a fixed seed fixes the value exactly.
ElboResult elbo_reward(const StructuredRewardModel& model,
                       const std::vector<Trajectory>& batch, Rng& rng);

// Decoded goal estimates for n latent draws from q_phi.
std::vector<Eigen::VectorXd> imagine_goals(const StructuredRewardModel& model,
                                           const DiagonalGaussian& q_phi,
                                           int n, Rng& rng);

}  // namespace metashift
