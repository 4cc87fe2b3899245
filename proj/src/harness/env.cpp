#include "metashift/harness/env.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

#include "metashift/trainer/trainer.hpp"

namespace metashift {

PolarGrid::PolarGrid(int n_radii, int n_angles, double r_max)
    : n_radii_(n_radii), n_angles_(n_angles), r_max_(r_max) {
  if (n_radii < 1 || n_angles < 1 || !(r_max > 0.0))
    throw std::invalid_argument("PolarGrid: bad parameters");
}

std::optional<std::size_t> PolarGrid::cell_of(const Vec2& p) const {
  const double r = p.norm();
  if (r >= r_max_) return std::nullopt;
  int band = static_cast<int>(r * n_radii_ / r_max_);
  band = std::min(band, n_radii_ - 1);
  double theta = std::atan2(p.y, p.x);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  int wedge = static_cast<int>(theta * n_angles_ / (2.0 * std::numbers::pi));
  wedge = std::min(wedge, n_angles_ - 1);
  return static_cast<std::size_t>(band) * n_angles_ + wedge;
}

Vec2 PolarGrid::cell_center(std::size_t cell) const {
  if (cell >= n_cells()) throw std::out_of_range("cell_center: bad cell");
  const int band = band_of_cell(cell);
  const int wedge = static_cast<int>(cell) % n_angles_;
  const double r = 0.5 * (band_lo(band) + band_hi(band));
  const double theta = (wedge + 0.5) * 2.0 * std::numbers::pi / n_angles_;
  return {r * std::cos(theta), r * std::sin(theta)};
}

Vec2 wind_step(const WindNavEnv& env, const Vec2& state, const Vec2& action,
               const Vec2& wind) {
  const double ax = std::clamp(action.x, -env.action_bound, env.action_bound);
  const double ay = std::clamp(action.y, -env.action_bound, env.action_bound);
  Vec2 next{state.x + (ax + wind.x) * env.dt, state.y + (ay + wind.y) * env.dt};
  next.x = std::clamp(next.x, -env.arena, env.arena);
  next.y = std::clamp(next.y, -env.arena, env.arena);
  return next;
}

double MetaEpisodeResult::mean_return() const {
  if (returns.empty()) return 0.0;
  double acc = 0.0;
  for (double r : returns) acc += r;
  return acc / static_cast<double>(returns.size());
}

double MetaEpisodeResult::success_rate() const {
  if (returns.empty()) return 0.0;
  double acc = 0.0;
  for (double r : returns) acc += r > 0.0 ? 1.0 : 0.0;
  return acc / static_cast<double>(returns.size());
}

namespace {

MetaEpisodeResult search_episode(const SearchPolicy& policy,
                                 const PolarGrid& grid,
                                 const std::optional<std::size_t>& true_cell,
                                 int k, Rng& rng, bool dense, const Vec2& target) {
  if (policy.n_goals() != grid.n_cells())
    throw std::invalid_argument("run_meta_episode: policy/grid cell mismatch");
  // An off-grid parameter can never be matched; n_cells() is the sentinel.
  const std::size_t cell = true_cell.value_or(grid.n_cells());
  const SearchOutcome outcome = simulate_search(policy, cell, k, rng);

  MetaEpisodeResult result;
  result.success = outcome.success;
  result.found_episode = outcome.found_episode;
  if (!dense) {
    result.returns = outcome.episode_returns;
    return result;
  }

  // Dense variant: negative distance between the episode's visited cell
  // center and the true parameter.
  result.returns.resize(static_cast<std::size_t>(k), 0.0);
  for (int ep = 0; ep < k; ++ep) {
    Vec2 visited{0.0, 0.0};
    if (outcome.found_episode && ep >= *outcome.found_episode) {
      visited = grid.cell_center(cell);
    } else {
      visited = grid.cell_center(outcome.sampled_cells[static_cast<std::size_t>(ep)]);
    }
    const Vec2 d{visited.x - target.x, visited.y - target.y};
    result.returns[static_cast<std::size_t>(ep)] = -d.norm();
  }
  return result;
}

}  // namespace

MetaEpisodeResult run_meta_episode(const SearchPolicy& policy,
                                   const PointNavEnv& env, const Vec2& goal,
                                   Rng& rng) {
  return search_episode(policy, env.grid, env.grid.cell_of(goal), env.k, rng,
                        env.dense, goal);
}

MetaEpisodeResult run_meta_episode(const SearchPolicy& policy,
                                   const WindNavEnv& env, const Vec2& wind,
                                   Rng& rng) {
  return search_episode(policy, env.grid, env.grid.cell_of(wind), env.k, rng,
                        false, wind);
}

}  // namespace metashift
