#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "metashift/core/rng.hpp"
#include "metashift/core/search_policy.hpp"

namespace metashift {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const { return std::sqrt(x * x + y * y); }
};

// Radial-angular discretization of a 2-D task parameter (goal position or
// wind vector). Cells are indexed band-major: cell = band * n_angles + wedge.
class PolarGrid {
 public:
  PolarGrid(int n_radii, int n_angles, double r_max);

  int n_radii() const { return n_radii_; }
  int n_angles() const { return n_angles_; }
  double r_max() const { return r_max_; }
  std::size_t n_cells() const {
    return static_cast<std::size_t>(n_radii_) *
           static_cast<std::size_t>(n_angles_);
  }

  // Cell containing the point, or absent when |p| >= r_max.
  std::optional<std::size_t> cell_of(const Vec2& p) const;
  Vec2 cell_center(std::size_t cell) const;
  int band_of_cell(std::size_t cell) const {
    return static_cast<int>(cell) / n_angles_;
  }
  double band_lo(int band) const { return band * r_max_ / n_radii_; }
  double band_hi(int band) const { return (band + 1) * r_max_ / n_radii_; }

 private:
  int n_radii_;
  int n_angles_;
  double r_max_;
};

// Sparse 2-D goal reaching: tasks are unobserved target positions; an
// episode earns 1 once the agent gets within delta of the target. The
// meta-policy is a search distribution over grid cells.
struct PointNavEnv {
  double delta = 0.05;
  int horizon = 60;
  int k = 2;
  double arena = 1.0;  // positions live in [-arena, arena]^2
  bool dense = false;  // negative-distance returns instead of {0,1}
  PolarGrid grid{8, 16, 0.8};
};

// Linear system under task-varying wind; the goal is fixed at
// (1/sqrt(2), 1/sqrt(2)) and the unknown task parameter is the wind vector.
struct WindNavEnv {
  double dt = 0.1;
  double action_bound = 0.1;
  double delta = 0.05;
  int horizon = 25;
  int k = 1;
  double arena = 1.0;
  PolarGrid grid{8, 16, 0.1};

  Vec2 goal() const { return {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}; }
};

// s' = s + action dt + wind dt, componentwise clamped to the arena. Actions
// are clamped to the box |a_i| <= action_bound first.
Vec2 wind_step(const WindNavEnv& env, const Vec2& state, const Vec2& action,
               const Vec2& wind);

struct MetaEpisodeResult {
  std::vector<double> returns;  // one entry per episode
  bool success = false;
  std::optional<int> found_episode;

  double mean_return() const;
  double success_rate() const;  // fraction of successful episodes
};

// k-episode search semantics: each episode samples a goal cell from the
// policy until the sampled cell contains the true task parameter; later
// episodes revisit the discovered cell. A parameter outside the grid is
// unreachable and the meta-episode fails.
MetaEpisodeResult run_meta_episode(const SearchPolicy& policy,
                                   const PointNavEnv& env, const Vec2& goal,
                                   Rng& rng);
MetaEpisodeResult run_meta_episode(const SearchPolicy& policy,
                                   const WindNavEnv& env, const Vec2& wind,
                                   Rng& rng);

}  // namespace metashift
