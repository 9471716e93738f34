#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "shepherd/rng.hpp"
#include "shepherd/sim.hpp"
#include "shepherd/vec.hpp"

namespace shepherd {

struct EpisodeConfig {
  int max_steps = 1200;      // n_h
  int success_window = 200;  // n_t
  int action_hold = 100;     // n_w (used by the hierarchical controller)
  std::uint64_t seed = 0;

  void validate() const {
    if (success_window > max_steps)
      throw std::invalid_argument("EpisodeConfig: success_window must be <= max_steps");
    if (action_hold < 1) throw std::invalid_argument("EpisodeConfig: action_hold must be >= 1");
  }
};

struct RewardGains {
  double k1 = 5e-2;
  double k2 = 1e-1;
  double k3 = 1.5e-2;
  double k4 = 1e-2;

  std::vector<std::string> validate() const {
    if (k1 <= 0 || k2 <= 0 || k3 <= 0 || k4 <= 0)
      throw std::invalid_argument("RewardGains: all gains must be positive");
    std::vector<std::string> warnings;
    if (!(k3 < k1 && k1 < k2))
      warnings.push_back("RewardGains: hierarchy k3 < k1 < k2 not satisfied");
    return warnings;
  }
};

struct EpisodeRecord {
  bool success = false;
  std::optional<std::int64_t> settling_time;  // n*
  double path_length = 0.0;                   // d
  std::vector<double> chi_trace;
  double cumulative_reward = 0.0;
};

/// Fraction of targets inside the buffered goal region (boundary counts in).
inline double chi(const WorldState& state, const SimParams& params) {
  const double radius = params.buffered_goal_radius();
  std::int64_t inside = 0;
  for (const Vec2& t : state.targets)
    if (t.norm() <= radius) ++inside;
  return static_cast<double>(inside) / static_cast<double>(state.targets.size());
}

/// First step n with chi(k) >= 0.99 for all k in [n, min(n+n_t, n_h)].
/// The trace may end early (episode termination); a window the trace cannot
/// certify does not qualify.
inline std::optional<std::int64_t> settling_time(const std::vector<double>& chi_trace,
                                                 std::int64_t n_t, std::int64_t n_h) {
  const std::int64_t last = static_cast<std::int64_t>(chi_trace.size()) - 1;
  for (std::int64_t n = 0; n <= last; ++n) {
    const std::int64_t n_f = std::min(n + n_t, n_h);
    if (n_f > last) break;
    bool ok = true;
    for (std::int64_t k = n; k <= n_f && ok; ++k) ok = chi_trace[k] >= 0.99;
    if (ok) return n;
  }
  return std::nullopt;
}

/// Average distance traveled by the herders over [0, n].
inline double path_length(const std::vector<std::vector<Vec2>>& herder_traces, std::int64_t n) {
  if (herder_traces.empty()) throw std::invalid_argument("path_length: no herder traces");
  double total = 0.0;
  for (const auto& trace : herder_traces) {
    if (static_cast<std::int64_t>(trace.size()) < n + 1)
      throw std::invalid_argument("path_length: trace shorter than n+1 entries");
    for (std::int64_t k = 0; k < n; ++k) total += (trace[k + 1] - trace[k]).norm();
  }
  return total / static_cast<double>(herder_traces.size());
}

/// Driving reward (1 herder, 1 target): distance and radial penalties apply
/// while the target is outside the goal region, plus a control-effort term.
inline double reward_driving(const WorldState& state, Vec2 u, const SimParams& params,
                             const RewardGains& gains) {
  const Vec2 t = state.targets[0];
  const Vec2 h = state.herders[0];
  double r = -gains.k3 * u.norm();
  if (t.norm() > params.goal_radius)
    r -= gains.k1 * (t - h).norm() + gains.k2 * (t.norm() - params.goal_radius);
  return r;
}

/// Team reward for target selection: summed radial penalty of targets
/// outside the goal region, shared identically by all herders.
inline double reward_selection(const WorldState& state, const SimParams& params,
                               const RewardGains& gains) {
  double penalty = 0.0;
  for (const Vec2& t : state.targets) {
    const double radius = t.norm();
    if (radius > params.goal_radius) penalty += radius - params.goal_radius;
  }
  return -gains.k4 * penalty;
}

/// Driving observation for one herder-target pair: [T/R, (T-H)/R].
inline std::vector<double> observe_driving_for(Vec2 herder, Vec2 target,
                                               const SimParams& params) {
  const double r = params.arena_half_width;
  const Vec2 rel = target - herder;
  return {target.x / r, target.y / r, rel.x / r, rel.y / r};
}

inline std::vector<double> observe_driving(const WorldState& state, const SimParams& params) {
  return observe_driving_for(state.herders[0], state.targets[0], params);
}

namespace detail {

/// Indices of `points` sorted by distance to `origin`, ascending, with a
/// stable index tie-break; `exclude` skips one index (the observer itself).
inline std::vector<int> indices_by_distance(const std::vector<Vec2>& points, Vec2 origin,
                                            int exclude = -1) {
  std::vector<int> idx;
  idx.reserve(points.size());
  for (int i = 0; i < static_cast<int>(points.size()); ++i)
    if (i != exclude) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double da = (points[a] - origin).norm2();
    const double db = (points[b] - origin).norm2();
    if (da != db) return da < db;
    return a < b;
  });
  return idx;
}

}  // namespace detail

/// Selection observation: [H_self, other herders by distance, targets by
/// distance], all divided by R. Length 2(N+M).
inline std::vector<double> observe_selection(const WorldState& state, int self_index,
                                             const SimParams& params) {
  const double r = params.arena_half_width;
  const Vec2 self = state.herders[self_index];
  std::vector<double> obs;
  obs.reserve(2 * (state.herders.size() + state.targets.size()));
  obs.push_back(self.x / r);
  obs.push_back(self.y / r);
  for (int i : detail::indices_by_distance(state.herders, self, self_index)) {
    obs.push_back(state.herders[i].x / r);
    obs.push_back(state.herders[i].y / r);
  }
  for (int a : detail::indices_by_distance(state.targets, self)) {
    obs.push_back(state.targets[a].x / r);
    obs.push_back(state.targets[a].y / r);
  }
  return obs;
}

// One velocity command per herder per step. Controllers may keep per-episode
// state (hold counters); reset() is called once before each episode.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(const WorldState& /*initial*/, const SimParams& /*params*/) {}
  virtual std::vector<Vec2> commands(const WorldState& state, const SimParams& params) = 0;
};

class ScriptedController : public Controller {
 public:
  explicit ScriptedController(std::function<std::vector<Vec2>(const WorldState&, const SimParams&)> fn)
      : fn_(std::move(fn)) {}
  std::vector<Vec2> commands(const WorldState& state, const SimParams& params) override {
    return fn_(state, params);
  }

 private:
  std::function<std::vector<Vec2>(const WorldState&, const SimParams&)> fn_;
};

struct EpisodeHooks {
  // Called after every step (and once on the initial state) with the current
  // state; used for trace capture.
  std::function<void(const WorldState&)> observe;
  // Optional per-step reward, accumulated into cumulative_reward; arguments
  // are the pre-step state and the commands applied in it.
  std::function<double(const WorldState&, const std::vector<Vec2>&)> reward;
};

/// Steps the world under `controller` until chi >= 0.99 has held for n_t
/// consecutive steps past the settling point or n_h steps have elapsed.
inline EpisodeRecord run_episode(Controller& controller, const EpisodeConfig& config,
                                 const SimParams& params, RngStream& init_rng,
                                 RngStream& noise_rng, const EpisodeHooks& hooks = {}) {
  config.validate();
  WorldState state = sample_initial(params, init_rng);
  controller.reset(state, params);

  EpisodeRecord record;
  record.chi_trace.reserve(config.max_steps + 1);
  record.chi_trace.push_back(chi(state, params));
  if (hooks.observe) hooks.observe(state);

  int consecutive = record.chi_trace.back() >= 0.99 ? 1 : 0;
  for (std::int64_t k = 0; k < config.max_steps; ++k) {
    const std::vector<Vec2> u = controller.commands(state, params);
    if (hooks.reward) record.cumulative_reward += hooks.reward(state, u);

    std::vector<Vec2> new_targets = step_targets(state, params, noise_rng);
    for (std::size_t i = 0; i < state.herders.size(); ++i) {
      const Vec2 next = step_herder(state.herders[i], u[i], params);
      record.path_length += (next - state.herders[i]).norm() / state.herders.size();
      state.herders[i] = next;
    }
    state.targets = std::move(new_targets);
    state.step_index = k + 1;

    record.chi_trace.push_back(chi(state, params));
    if (hooks.observe) hooks.observe(state);
    consecutive = record.chi_trace.back() >= 0.99 ? consecutive + 1 : 0;
    if (consecutive >= config.success_window + 1) break;
  }

  record.settling_time = settling_time(record.chi_trace, config.success_window, config.max_steps);
  record.success = record.settling_time.has_value();
  return record;
}

}  // namespace shepherd
