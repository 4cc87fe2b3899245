#include "metashift/models/trajectory.hpp"

#include <stdexcept>

namespace metashift {

Trajectory::Trajectory(Eigen::MatrixXd s, Eigen::MatrixXd a, Eigen::VectorXd r)
    : states(std::move(s)), actions(std::move(a)), rewards(std::move(r)) {
  if (states.rows() == 0)
    throw std::invalid_argument("Trajectory: empty state sequence");
  if (actions.rows() != states.rows() || rewards.size() != states.rows())
    throw std::invalid_argument("Trajectory: inconsistent lengths");
}

std::optional<Eigen::VectorXd> goal_summary(const Trajectory& traj) {
  double total = 0.0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(traj.state_dim());
  for (Eigen::Index t = 0; t < traj.length(); ++t) {
    const double r = traj.rewards(t);
    if (r < 0.0)
      throw std::invalid_argument("goal_summary: rewards must be non-negative");
    if (r > 0.0) {
      acc += r * traj.states.row(t).transpose();
      total += r;
    }
  }
  if (total == 0.0) return std::nullopt;
  return Eigen::VectorXd(acc / total);
}

}  // namespace metashift
