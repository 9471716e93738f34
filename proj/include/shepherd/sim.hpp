#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "shepherd/rng.hpp"
#include "shepherd/vec.hpp"

namespace shepherd {

// Physical and model constants of the shepherding dynamics.
struct SimParams {
  double goal_radius = 5.0;        // rho_G
  double arena_half_width = 25.0;  // R
  double herder_max_speed = 8.0;   // v_H
  double diffusion = 0.5;          // D
  double repulsion_range = 2.5;    // lambda
  double repulsion_gain = 3.0;     // k^T
  double dt = 0.05;
  double buffer_fraction = 0.1;  // epsilon
  int num_herders = 1;
  int num_targets = 1;

  /// Maximum escape speed of a target under repulsion from one herder.
  double target_escape_speed() const { return repulsion_gain * repulsion_range; }

  /// Radius of the buffered goal region used for success accounting.
  double buffered_goal_radius() const { return (1.0 + buffer_fraction) * goal_radius; }

  // Throws std::invalid_argument on hard violations; returns soft warnings.
  std::vector<std::string> validate() const {
    if (goal_radius <= 0 || arena_half_width <= 0 || herder_max_speed <= 0 ||
        repulsion_range <= 0 || repulsion_gain <= 0 || dt <= 0)
      throw std::invalid_argument("SimParams: lengths, speeds, gains and dt must be positive");
    if (diffusion < 0) throw std::invalid_argument("SimParams: diffusion D must be >= 0");
    if (buffer_fraction < 0) throw std::invalid_argument("SimParams: buffer_fraction must be >= 0");
    if (num_herders < 1 || num_targets < 1)
      throw std::invalid_argument("SimParams: need at least one herder and one target");
    if (!(herder_max_speed > target_escape_speed()))
      throw std::invalid_argument(
          "SimParams: requires v_H > k^T*lambda (herder_max_speed must exceed "
          "the target escape speed, otherwise stable chasing patterns form)");
    if (!(buffered_goal_radius() < arena_half_width))
      throw std::invalid_argument("SimParams: requires (1+epsilon)*rho_G < R");
    std::vector<std::string> warnings;
    if (repulsion_gain * repulsion_range * repulsion_range < 10.0 * diffusion)
      warnings.push_back(
          "SimParams: k^T*lambda^2 is not >> D; repulsion may not dominate diffusion");
    return warnings;
  }
};

// Herder and target positions at one time step.
struct WorldState {
  std::vector<Vec2> herders;
  std::vector<Vec2> targets;
  std::int64_t step_index = 0;
};

inline Vec2 clamp_domain(Vec2 p, double half_width) {
  return {std::clamp(p.x, -half_width, half_width),
          std::clamp(p.y, -half_width, half_width)};
}

/// Harmonic repulsion kernel: (lambda-|x|) x_hat inside range, zero outside.
/// The degenerate overlap |x| < 1e-9 maps to zero.
inline Vec2 repulsion(double range, Vec2 x) {
  const double r = x.norm();
  if (r < 1e-9 || r > range) return {0.0, 0.0};
  return x * ((range - r) / r);
}

/// One Euler-Maruyama step of the target dynamics. Noise is drawn in fixed
/// target order, one standard normal pair per target, also when D == 0.
inline std::vector<Vec2> step_targets(const WorldState& state, const SimParams& params,
                                      RngStream& rng) {
  const double noise_scale = std::sqrt(2.0 * params.diffusion * params.dt);
  std::vector<Vec2> next(state.targets.size());
  for (std::size_t a = 0; a < state.targets.size(); ++a) {
    Vec2 drift{0.0, 0.0};
    for (const Vec2& h : state.herders)
      drift += repulsion(params.repulsion_range, state.targets[a] - h);
    const Vec2 xi = rng.normal2();
    next[a] = clamp_domain(state.targets[a] + drift * (params.dt * params.repulsion_gain) +
                               xi * noise_scale,
                           params.arena_half_width);
  }
  return next;
}

/// One step of the herder single-integrator under a saturated velocity command.
inline Vec2 step_herder(Vec2 h, Vec2 u, const SimParams& params) {
  return clamp_domain(h + saturate(u, params.herder_max_speed) * params.dt,
                      params.arena_half_width);
}

/// Initial condition: all agents i.i.d. area-uniform on the disk of radius R.
/// Draw order: herders first, then targets; radius then angle per agent.
inline WorldState sample_initial(const SimParams& params, RngStream& rng) {
  auto draw = [&]() -> Vec2 {
    const double r = params.arena_half_width * std::sqrt(rng.uniform());
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    return {r * std::cos(a), r * std::sin(a)};
  };
  WorldState state;
  state.herders.resize(params.num_herders);
  state.targets.resize(params.num_targets);
  for (auto& h : state.herders) h = draw();
  for (auto& t : state.targets) t = draw();
  state.step_index = 0;
  return state;
}

}  // namespace shepherd
