#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "shepherd/env.hpp"
#include "shepherd/nn.hpp"
#include "shepherd/rng.hpp"
#include "shepherd/sim.hpp"

namespace shepherd {

// Topological sensing: each herder perceives the n_herders nearest herders
// (itself included) and the n_targets nearest targets.
struct SensingConfig {
  int n_herders = 2;  // N_hat
  int n_targets = 5;  // M_hat

  void validate(const SimParams& params) const {
    if (n_herders < 1 || n_herders > params.num_herders)
      throw std::invalid_argument("SensingConfig: need 1 <= N_hat <= N");
    if (n_targets < 1 || n_targets > params.num_targets)
      throw std::invalid_argument("SensingConfig: need 1 <= M_hat <= M");
  }
};

/// Global indices of the M_hat targets nearest to herder `self_index`,
/// ascending distance, stable index tie-break. The i-th entry is the global
/// id behind the selection head's local output index i.
inline std::vector<int> perceived_targets(const WorldState& state, int self_index,
                                          const SensingConfig& sensing) {
  std::vector<int> order =
      detail::indices_by_distance(state.targets, state.herders[self_index]);
  order.resize(sensing.n_targets);
  return order;
}

/// Truncated selection observation: [self, N_hat-1 nearest other herders,
/// M_hat nearest targets], all divided by R. Length 2(N_hat + M_hat).
inline std::vector<double> topological_observe(const WorldState& state, int self_index,
                                               const SensingConfig& sensing,
                                               const SimParams& params) {
  const double r = params.arena_half_width;
  const Vec2 self = state.herders[self_index];
  std::vector<double> obs;
  obs.reserve(2 * (sensing.n_herders + sensing.n_targets));
  obs.push_back(self.x / r);
  obs.push_back(self.y / r);
  const std::vector<int> herder_order =
      detail::indices_by_distance(state.herders, self, self_index);
  for (int i = 0; i < sensing.n_herders - 1; ++i) {
    obs.push_back(state.herders[herder_order[i]].x / r);
    obs.push_back(state.herders[herder_order[i]].y / r);
  }
  for (int a : perceived_targets(state, self_index, sensing)) {
    obs.push_back(state.targets[a].x / r);
    obs.push_back(state.targets[a].y / r);
  }
  return obs;
}

// Two-layer controller per herder: the shared categorical selection head
// picks a perceived target every action_hold steps (or immediately when the
// held target leaves the perceived set); the frozen Gaussian-head driving
// network chases it. Herders are stepped in index order; no selection state
// crosses herders.
class HierarchicalController : public Controller {
 public:
  HierarchicalController(nn::MlpParams selection_actor, nn::MlpParams driving_actor,
                         SensingConfig sensing, int action_hold, bool deterministic = true,
                         RngStream* policy_rng = nullptr)
      : selection_(std::move(selection_actor)),
        driving_(std::move(driving_actor)),
        sensing_(sensing),
        action_hold_(action_hold),
        deterministic_(deterministic),
        policy_rng_(policy_rng) {
    if (action_hold_ < 1)
      throw std::invalid_argument("HierarchicalController: action_hold must be >= 1");
    if (!deterministic_ && policy_rng_ == nullptr)
      throw std::invalid_argument("HierarchicalController: stochastic mode needs a policy rng");
    if (selection_.output_size() != sensing_.n_targets)
      throw std::invalid_argument(
          "HierarchicalController: selection head output does not match M_hat");
    if (selection_.input_size() != 2 * (sensing_.n_herders + sensing_.n_targets))
      throw std::invalid_argument(
          "HierarchicalController: selection input does not match 2(N_hat+M_hat)");
  }

  void reset(const WorldState& state, const SimParams& params) override {
    sensing_.validate(params);
    hold_counter_.assign(state.herders.size(), 0);
    current_selection_.assign(state.herders.size(), -1);
  }

  std::vector<Vec2> commands(const WorldState& state, const SimParams& params) override {
    std::vector<Vec2> u(state.herders.size());
    for (int i = 0; i < static_cast<int>(state.herders.size()); ++i) {
      const std::vector<int> perceived = perceived_targets(state, i, sensing_);
      const bool lost = current_selection_[i] < 0 ||
                        std::find(perceived.begin(), perceived.end(), current_selection_[i]) ==
                            perceived.end();
      if (hold_counter_[i] == 0 || lost) {
        const std::vector<double> obs = topological_observe(state, i, sensing_, params);
        const std::vector<double> probs =
            nn::categorical_probs(nn::forward(selection_, obs));
        int local;
        if (deterministic_) {
          local = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
        } else {
          const double u01 = policy_rng_->uniform();
          double acc = 0.0;
          local = static_cast<int>(probs.size()) - 1;
          for (std::size_t a = 0; a < probs.size(); ++a) {
            acc += probs[a];
            if (u01 < acc) {
              local = static_cast<int>(a);
              break;
            }
          }
        }
        current_selection_[i] = perceived[local];
        hold_counter_[i] = 0;
      }
      const Vec2 target = state.targets[current_selection_[i]];
      const std::vector<double> dobs = observe_driving_for(state.herders[i], target, params);
      std::vector<double> mean = nn::forward(driving_, dobs);
      if (!deterministic_)
        for (std::size_t j = 0; j < mean.size(); ++j)
          mean[j] += std::exp(driving_.log_std[j]) * policy_rng_->normal();
      u[i] = Vec2{mean[0], mean[1]} * params.herder_max_speed;
      hold_counter_[i] = (hold_counter_[i] + 1) % action_hold_;
    }
    return u;
  }

  const std::vector<int>& current_selection() const { return current_selection_; }

 private:
  nn::MlpParams selection_;
  nn::MlpParams driving_;
  SensingConfig sensing_;
  int action_hold_;
  bool deterministic_;
  RngStream* policy_rng_;
  std::vector<int> hold_counter_;
  std::vector<int> current_selection_;
};

}  // namespace shepherd
