#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "shepherd/env.hpp"
#include "shepherd/sim.hpp"
#include "shepherd/vec.hpp"

namespace shepherd {

// Model-based baseline: proportional drive-from-behind controller plus
// furthest-target / closest-herder selection rule.
struct HeuristicParams {
  double standoff = 1.25;         // delta, distance behind the target
  double proportional_gain = 10;  // k_p
  // Targets inside capture_factor * rho_G are not selectable. Driving a
  // target slightly past the goal boundary (factor < 1) leaves slack inside
  // the buffered success region before diffusion pushes it back out.
  double capture_factor = 0.8;

  void validate() const {
    if (standoff <= 0 || proportional_gain <= 0 || capture_factor <= 0)
      throw std::invalid_argument("HeuristicParams: all fields must be positive");
  }
};

/// Velocity command steering the herder to the standoff point delta behind
/// the target (relative to the goal at the origin), saturated at v_H.
inline Vec2 heuristic_drive(Vec2 herder, Vec2 target, const SimParams& params,
                            const HeuristicParams& hp) {
  const double radius = target.norm();
  const Vec2 behind =
      radius < 1e-9 ? target : target + target * (hp.standoff / radius);
  return saturate((behind - herder) * hp.proportional_gain, params.herder_max_speed);
}

/// Among targets outside the capture radius that are at least as close to
/// herder `self_index` as to every other herder (ties to the lower herder
/// index), pick the one furthest from the goal (ties to the lower target
/// index). Empty eligible set gives nullopt.
inline std::optional<int> heuristic_select(const WorldState& state, int self_index,
                                           const SimParams& params, const HeuristicParams& hp) {
  const double capture_radius = hp.capture_factor * params.goal_radius;
  int best = -1;
  double best_radius = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < static_cast<int>(state.targets.size()); ++a) {
    const Vec2 t = state.targets[a];
    const double radius = t.norm();
    if (radius <= capture_radius) continue;
    const double own = (t - state.herders[self_index]).norm2();
    bool mine = true;
    for (int j = 0; j < static_cast<int>(state.herders.size()) && mine; ++j) {
      if (j == self_index) continue;
      const double other = (t - state.herders[j]).norm2();
      if (other < own || (other == own && j < self_index)) mine = false;
    }
    if (mine && radius > best_radius) {
      best_radius = radius;
      best = a;
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

// Per-step selection plus proportional driving; holds position when no
// target is eligible.
class HeuristicController : public Controller {
 public:
  explicit HeuristicController(HeuristicParams hp = {}) : hp_(hp) { hp_.validate(); }

  std::vector<Vec2> commands(const WorldState& state, const SimParams& params) override {
    std::vector<Vec2> u(state.herders.size(), Vec2{0.0, 0.0});
    for (int i = 0; i < static_cast<int>(state.herders.size()); ++i) {
      if (auto sel = heuristic_select(state, i, params, hp_))
        u[i] = heuristic_drive(state.herders[i], state.targets[*sel], params, hp_);
    }
    return u;
  }

 private:
  HeuristicParams hp_;
};

}  // namespace shepherd
