#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace metashift {

// One episode of experience: T states, T actions, T rewards. Sparse
// environments use {0,1} rewards; dense ones real values.
struct Trajectory {
  Eigen::MatrixXd states;   // T x state_dim
  Eigen::MatrixXd actions;  // T x action_dim
  Eigen::VectorXd rewards;  // T

  Trajectory(Eigen::MatrixXd s, Eigen::MatrixXd a, Eigen::VectorXd r);

  Eigen::Index length() const { return states.rows(); }
  Eigen::Index state_dim() const { return states.cols(); }
  Eigen::Index action_dim() const { return actions.cols(); }
};

// Reward-weighted mean of visited states, (sum_t r_t s_t) / (sum_t r_t).
// Absent when the trajectory never collected positive reward.
std::optional<Eigen::VectorXd> goal_summary(const Trajectory& traj);

}  // namespace metashift
