#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shepherd/env.hpp"
#include "shepherd/nn.hpp"
#include "shepherd/rng.hpp"
#include "shepherd/sim.hpp"

namespace shepherd::rl {

struct PpoHyper {
  double stepsize = 5e-4;
  double discount = 0.98;      // gamma
  double gae_lambda = 0.95;
  double clip = 0.2;           // epsilon_clip
  double vf_coeff = 0.5;
  double entropy_coeff = 0.1;
  int epochs = 10;
  int horizon = 4096;          // per-agent steps between updates
  int minibatch_size = 128;
  int num_actors = 8;
  std::int64_t total_episodes = 20000;

  static PpoHyper driving_defaults() { return PpoHyper{}; }

  static PpoHyper selection_defaults() {
    PpoHyper h;
    h.entropy_coeff = 0.0;
    h.horizon = 32;
    h.minibatch_size = 1024;
    h.num_actors = 32;
    h.total_episodes = 200000;
    return h;
  }

  void validate() const {
    if (discount < 0 || discount > 1 || gae_lambda < 0 || gae_lambda > 1)
      throw std::invalid_argument("PpoHyper: discount and gae_lambda must lie in [0,1]");
    if (clip <= 0) throw std::invalid_argument("PpoHyper: clip must be positive");
    if (minibatch_size > horizon * num_actors)
      throw std::invalid_argument("PpoHyper: minibatch_size must be <= horizon*num_actors");
    if (stepsize < 0 || epochs < 1 || horizon < 1 || num_actors < 1 || minibatch_size < 1 ||
        total_episodes < 1)
      throw std::invalid_argument("PpoHyper: counts must be positive");
  }
};

// Flat transition storage; stream boundaries are handled by the collectors,
// which run GAE per stream before concatenating.
struct RolloutBuffer {
  std::vector<std::vector<double>> observations;
  std::vector<std::vector<double>> actions;  // categorical actions store {index}
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return observations.size(); }

  void clear() {
    observations.clear();
    actions.clear();
    log_probs.clear();
    rewards.clear();
    values.clear();
    dones.clear();
    advantages.clear();
    returns.clear();
  }
};

/// GAE(gamma, lambda) over one stream. `bootstrap` is the critic value of the
/// post-horizon state (0 when that state is terminal).
inline std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const std::vector<double>& rewards, const std::vector<double>& values, double bootstrap,
    const std::vector<std::uint8_t>& dones, double gamma, double gae_lambda) {
  if (rewards.size() != values.size() || rewards.size() != dones.size())
    throw std::invalid_argument("compute_gae: rewards, values and dones must have equal length");
  const std::size_t n = rewards.size();
  std::vector<double> adv(n), ret(n);
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double next_value = i + 1 < n ? values[i + 1] : bootstrap;
    const double delta = rewards[i] + gamma * next_value * not_done - values[i];
    next_adv = delta + gamma * gae_lambda * not_done * next_adv;
    adv[i] = next_adv;
    ret[i] = adv[i] + values[i];
  }
  return {std::move(adv), std::move(ret)};
}

/// Clipped surrogate objective for one sample (to be maximized).
inline double ppo_surrogate(double new_log_prob, double old_log_prob, double advantage,
                            double clip) {
  const double ratio = std::exp(new_log_prob - old_log_prob);
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

enum class ActionKind { gaussian, categorical };

/// Zero-mean unit-variance normalization over the whole update batch.
inline std::vector<double> normalize_advantages(const std::vector<double>& advantages) {
  const std::size_t n = advantages.size();
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double std_dev = std::sqrt(var / n) + 1e-8;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (advantages[i] - mean) / std_dev;
  return out;
}

struct UpdateDiagnostics {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double policy_loss = 0.0;  // negated mean surrogate, last epoch
  double value_loss = 0.0;
  double entropy = 0.0;
};

/// One PPO update: `epochs` passes over shuffled minibatches maximizing
/// surrogate - vf_coeff * value loss + entropy_coeff * entropy. Advantages
/// are normalized over the whole batch first. Throws on non-finite losses.
inline UpdateDiagnostics ppo_update(nn::MlpParams& actor, nn::AdamState& actor_opt,
                                    nn::MlpParams& critic, nn::AdamState& critic_opt,
                                    RolloutBuffer& buffer, const PpoHyper& hyper,
                                    RngStream& rng, ActionKind kind) {
  hyper.validate();
  const std::size_t n = buffer.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty buffer");
  if (buffer.advantages.size() != n || buffer.returns.size() != n)
    throw std::invalid_argument("ppo_update: advantages/returns not computed");

  const std::vector<double> adv = normalize_advantages(buffer.advantages);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateDiagnostics diag;
  nn::ForwardTrace trace;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    // Fisher-Yates with our stream so shuffles are seed-reproducible
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_index(i + 1)]);

    double sum_ratio = 0.0, sum_clip = 0.0, sum_surr = 0.0, sum_vloss = 0.0, sum_ent = 0.0;
    for (std::size_t start = 0; start < n; start += hyper.minibatch_size) {
      const std::size_t end = std::min(n, start + hyper.minibatch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      nn::Gradients actor_grads = nn::Gradients::zeros_like(actor);
      nn::Gradients critic_grads = nn::Gradients::zeros_like(critic);

      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const auto& obs = buffer.observations[i];
        const double a_i = adv[i];

        const std::vector<double> head = nn::forward_traced(actor, obs, trace);
        double new_lp, entropy = 0.0;
        std::vector<double> upstream(head.size(), 0.0);

        double dsurr_dlp;  // filled below
        if (kind == ActionKind::gaussian) {
          new_lp = nn::gaussian_log_prob(head, actor.log_std, buffer.actions[i]);
          entropy = nn::gaussian_entropy(actor.log_std);
        } else {
          const std::vector<double> probs = nn::categorical_probs(head);
          const int a = static_cast<int>(buffer.actions[i][0]);
          new_lp = std::log(std::max(probs[a], 1e-300));
          if (hyper.entropy_coeff != 0.0)
            for (double p : probs)
              if (p > 0) entropy -= p * std::log(p);
        }

        const double ratio = std::exp(new_lp - buffer.log_probs[i]);
        const double clipped = std::clamp(ratio, 1.0 - hyper.clip, 1.0 + hyper.clip);
        const double surr = std::min(ratio * a_i, clipped * a_i);
        dsurr_dlp = ratio * a_i <= clipped * a_i ? ratio * a_i : 0.0;
        sum_ratio += ratio;
        sum_clip += std::abs(ratio - 1.0) > hyper.clip ? 1.0 : 0.0;
        sum_surr += surr;
        sum_ent += entropy;

        // gradient of -(surrogate + entropy bonus) wrt actor head and log_std
        const double w = -dsurr_dlp * inv_batch;
        if (kind == ActionKind::gaussian) {
          std::vector<double> d_mean(head.size()), d_ls(head.size());
          nn::gaussian_log_prob_grads(head, actor.log_std, buffer.actions[i], d_mean, d_ls);
          for (std::size_t j = 0; j < head.size(); ++j) {
            upstream[j] = w * d_mean[j];
            actor_grads.log_std[j] +=
                w * d_ls[j] - hyper.entropy_coeff * inv_batch;  // d entropy/d log_std = 1
          }
        } else {
          const std::vector<double> probs = nn::categorical_probs(head);
          const int a = static_cast<int>(buffer.actions[i][0]);
          for (std::size_t j = 0; j < head.size(); ++j) {
            const double dlp = (static_cast<int>(j) == a ? 1.0 : 0.0) - probs[j];
            upstream[j] = w * dlp;
            if (hyper.entropy_coeff != 0.0) {
              // dH/dlogits_j = -p_j (log p_j + H)
              const double dent = -probs[j] * (std::log(std::max(probs[j], 1e-300)) + entropy);
              upstream[j] -= hyper.entropy_coeff * inv_batch * dent;
            }
          }
        }
        nn::backward(actor, trace, upstream, actor_grads);

        // critic: vf_coeff * (v - return)^2
        const double v = nn::forward_traced(critic, obs, trace)[0];
        const double verr = v - buffer.returns[i];
        sum_vloss += verr * verr;
        const std::vector<double> vup{hyper.vf_coeff * 2.0 * verr * inv_batch};
        nn::backward(critic, trace, vup, critic_grads);
      }

      nn::adam_step(actor, actor_grads, actor_opt);
      nn::adam_step(critic, critic_grads, critic_opt);
    }

    diag.mean_ratio = sum_ratio / n;
    diag.clip_fraction = sum_clip / n;
    diag.policy_loss = -sum_surr / n;
    diag.value_loss = sum_vloss / n;
    diag.entropy = sum_ent / n;
    if (!std::isfinite(diag.policy_loss) || !std::isfinite(diag.value_loss))
      throw std::runtime_error("ppo_update: non-finite loss, aborting update");
  }
  return diag;
}

struct TrainResult {
  nn::MlpParams actor;
  nn::MlpParams critic;
  std::vector<double> episode_rewards;  // learning curve, in completion order
};

namespace detail {

struct EnvStream {
  WorldState state;
  RngStream init_rng;
  RngStream noise_rng;
  std::int64_t steps = 0;
  int consecutive = 0;
  double episode_reward = 0.0;

  EnvStream(std::uint64_t seed, std::uint64_t id)
      : init_rng(seed, 1000 + id), noise_rng(seed, 2000 + id) {}

  void reset(const SimParams& params) {
    state = sample_initial(params, init_rng);
    steps = 0;
    consecutive = chi(state, params) >= 0.99 ? 1 : 0;
    episode_reward = 0.0;
  }

  // Advances the world one step under the given commands; returns true when
  // the episode ended (containment held for n_t+1 chi samples or n_h steps).
  bool advance(const std::vector<Vec2>& u, const SimParams& params,
               const EpisodeConfig& config) {
    state.targets = step_targets(state, params, noise_rng);
    for (std::size_t i = 0; i < state.herders.size(); ++i)
      state.herders[i] = step_herder(state.herders[i], u[i], params);
    ++steps;
    state.step_index = steps;
    consecutive = chi(state, params) >= 0.99 ? consecutive + 1 : 0;
    return consecutive >= config.success_window + 1 || steps >= config.max_steps;
  }
};

// Per-stream transition staging; GAE is run per stream at update time.
struct StreamBuffer {
  std::vector<std::vector<double>> obs;
  std::vector<std::vector<double>> act;
  std::vector<double> logp, rew, val;
  std::vector<std::uint8_t> done;

  void flush_into(RolloutBuffer& out, double bootstrap, double gamma, double lam) {
    auto [adv, ret] = compute_gae(rew, val, bootstrap, done, gamma, lam);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      out.observations.push_back(std::move(obs[i]));
      out.actions.push_back(std::move(act[i]));
      out.log_probs.push_back(logp[i]);
      out.rewards.push_back(rew[i]);
      out.values.push_back(val[i]);
      out.dones.push_back(done[i]);
      out.advantages.push_back(adv[i]);
      out.returns.push_back(ret[i]);
    }
    obs.clear();
    act.clear();
    logp.clear();
    rew.clear();
    val.clear();
    done.clear();
  }
};

}  // namespace detail

/// PPO training of the continuous driving policy in the 1v1 scenario.
/// Fully deterministic given (seed, hyper, config, params).
inline TrainResult train_driving(const PpoHyper& hyper, const SimParams& params,
                                 const EpisodeConfig& config, std::uint64_t seed,
                                 const RewardGains& gains = {}) {
  hyper.validate();
  config.validate();
  if (params.num_herders != 1 || params.num_targets != 1)
    throw std::invalid_argument("train_driving: requires N = 1, M = 1");

  RngStream net_rng(seed, 1);
  RngStream policy_rng(seed, 2);
  RngStream update_rng(seed, 3);
  TrainResult result;
  result.actor = nn::init_mlp({4, 64, 64, 64, 64, 64, 2}, nn::Activation::relu,
                              nn::Activation::tanh, 0.01, true, net_rng);
  result.critic = nn::init_mlp({4, 64, 64, 64, 64, 64, 1}, nn::Activation::relu,
                               nn::Activation::linear, 1.0, false, net_rng);
  nn::AdamState actor_opt = nn::AdamState::init(result.actor, hyper.stepsize);
  nn::AdamState critic_opt = nn::AdamState::init(result.critic, hyper.stepsize);

  std::vector<detail::EnvStream> envs;
  std::vector<detail::StreamBuffer> staging(hyper.num_actors);
  for (int e = 0; e < hyper.num_actors; ++e) {
    envs.emplace_back(seed, static_cast<std::uint64_t>(e));
    envs.back().reset(params);
  }

  RolloutBuffer buffer;
  std::int64_t episodes_done = 0;
  nn::ForwardTrace trace;
  while (episodes_done < hyper.total_episodes) {
    for (int t = 0; t < hyper.horizon; ++t) {
      for (int e = 0; e < hyper.num_actors; ++e) {
        auto& env = envs[e];
        std::vector<double> obs = observe_driving(env.state, params);
        const std::vector<double> mean = nn::forward_traced(result.actor, obs, trace);
        std::vector<double> action(mean.size());
        for (std::size_t j = 0; j < mean.size(); ++j)
          action[j] = mean[j] + std::exp(result.actor.log_std[j]) * policy_rng.normal();
        const double logp = nn::gaussian_log_prob(mean, result.actor.log_std, action);
        const Vec2 u = saturate(Vec2{action[0], action[1]} * params.herder_max_speed,
                                params.herder_max_speed);
        const double reward = reward_driving(env.state, u, params, gains);
        const double value = nn::forward_traced(result.critic, obs, trace)[0];

        const bool done = env.advance({u}, params, config);
        env.episode_reward += reward;

        auto& sb = staging[e];
        sb.obs.push_back(std::move(obs));
        sb.act.push_back(std::move(action));
        sb.logp.push_back(logp);
        sb.rew.push_back(reward);
        sb.val.push_back(value);
        sb.done.push_back(done ? 1 : 0);

        if (done) {
          result.episode_rewards.push_back(env.episode_reward);
          ++episodes_done;
          env.reset(params);
        }
      }
    }
    for (int e = 0; e < hyper.num_actors; ++e) {
      double bootstrap = 0.0;
      if (!staging[e].done.back()) {
        const std::vector<double> next_obs = observe_driving(envs[e].state, params);
        bootstrap = nn::forward(result.critic, next_obs)[0];
      }
      staging[e].flush_into(buffer, bootstrap, hyper.discount, hyper.gae_lambda);
    }
    ppo_update(result.actor, actor_opt, result.critic, critic_opt, buffer, hyper, update_rng,
               ActionKind::gaussian);
    buffer.clear();
  }
  return result;
}

/// Deterministic low-level command: scaled tanh mean of the driving actor on
/// the (herder, target) observation.
inline std::function<Vec2(Vec2, Vec2, const SimParams&)> make_driving_fn(
    nn::MlpParams driving_actor) {
  return [actor = std::move(driving_actor)](Vec2 herder, Vec2 target,
                                            const SimParams& params) -> Vec2 {
    const std::vector<double> obs = observe_driving_for(herder, target, params);
    const std::vector<double> mean = nn::forward(actor, obs);
    return Vec2{mean[0], mean[1]} * params.herder_max_speed;
  };
}

/// MAPPO training of the shared discrete target-selection policy. Decisions
/// are held for config.action_hold steps; transitions live at decision-epoch
/// granularity with the team reward summed over the window. Both herders
/// write into the same buffer and update one shared parameter set.
inline TrainResult train_selection(const PpoHyper& hyper, const SimParams& params,
                                   const EpisodeConfig& config,
                                   const std::function<Vec2(Vec2, Vec2, const SimParams&)>& drive,
                                   std::uint64_t seed, const RewardGains& gains = {}) {
  hyper.validate();
  config.validate();
  const int n_herders = params.num_herders;
  const int n_targets = params.num_targets;
  if (hyper.horizon % n_herders != 0)
    throw std::invalid_argument("train_selection: horizon must be divisible by num_herders");
  const int epochs_per_update = hyper.horizon / n_herders;

  RngStream net_rng(seed, 1);
  RngStream policy_rng(seed, 2);
  RngStream update_rng(seed, 3);
  const int obs_dim = 2 * (n_herders + n_targets);
  TrainResult result;
  result.actor = nn::init_mlp({obs_dim, 256, 128, n_targets}, nn::Activation::relu,
                              nn::Activation::linear, 0.01, false, net_rng);
  result.critic = nn::init_mlp({obs_dim, 256, 128, 1}, nn::Activation::relu,
                               nn::Activation::linear, 1.0, false, net_rng);
  nn::AdamState actor_opt = nn::AdamState::init(result.actor, hyper.stepsize);
  nn::AdamState critic_opt = nn::AdamState::init(result.critic, hyper.stepsize);

  std::vector<detail::EnvStream> envs;
  // one staging stream per (env, herder) pair
  std::vector<detail::StreamBuffer> staging(hyper.num_actors * n_herders);
  for (int e = 0; e < hyper.num_actors; ++e) {
    envs.emplace_back(seed, static_cast<std::uint64_t>(e));
    envs.back().reset(params);
  }

  RolloutBuffer buffer;
  std::int64_t episodes_done = 0;
  nn::ForwardTrace trace;
  std::vector<int> selected(n_herders);
  while (episodes_done < hyper.total_episodes) {
    for (int epoch_i = 0; epoch_i < epochs_per_update; ++epoch_i) {
      for (int e = 0; e < hyper.num_actors; ++e) {
        auto& env = envs[e];
        // decision epoch: every herder picks a target from the shared actor
        for (int i = 0; i < n_herders; ++i) {
          std::vector<double> obs = observe_selection(env.state, i, params);
          const std::vector<double> logits = nn::forward_traced(result.actor, obs, trace);
          const std::vector<double> probs = nn::categorical_probs(logits);
          double u01 = policy_rng.uniform();
          int local = 0;
          double acc = 0.0;
          for (int a = 0; a < n_targets; ++a) {
            acc += probs[a];
            if (u01 < acc || a == n_targets - 1) {
              local = a;
              break;
            }
          }
          const double logp = std::log(std::max(probs[local], 1e-300));
          const double value = nn::forward_traced(result.critic, obs, trace)[0];
          const std::vector<int> order =
              shepherd::detail::indices_by_distance(env.state.targets, env.state.herders[i]);
          selected[i] = order[local];

          auto& sb = staging[e * n_herders + i];
          sb.obs.push_back(std::move(obs));
          sb.act.push_back({static_cast<double>(local)});
          sb.logp.push_back(logp);
          sb.val.push_back(value);
        }

        // hold window: frozen driving policy chases the selected targets
        double window_reward = 0.0;
        bool done = false;
        for (int w = 0; w < config.action_hold && !done; ++w) {
          std::vector<Vec2> u(n_herders);
          for (int i = 0; i < n_herders; ++i)
            u[i] = drive(env.state.herders[i], env.state.targets[selected[i]], params);
          done = env.advance(u, params, config);
          window_reward += reward_selection(env.state, params, gains);
        }
        env.episode_reward += window_reward;
        for (int i = 0; i < n_herders; ++i) {
          auto& sb = staging[e * n_herders + i];
          sb.rew.push_back(window_reward);
          sb.done.push_back(done ? 1 : 0);
        }
        if (done) {
          result.episode_rewards.push_back(env.episode_reward);
          ++episodes_done;
          env.reset(params);
        }
      }
    }
    for (int e = 0; e < hyper.num_actors; ++e) {
      for (int i = 0; i < n_herders; ++i) {
        auto& sb = staging[e * n_herders + i];
        double bootstrap = 0.0;
        if (!sb.done.back()) {
          const std::vector<double> next_obs = observe_selection(envs[e].state, i, params);
          bootstrap = nn::forward(result.critic, next_obs)[0];
        }
        sb.flush_into(buffer, bootstrap, hyper.discount, hyper.gae_lambda);
      }
    }
    ppo_update(result.actor, actor_opt, result.critic, critic_opt, buffer, hyper, update_rng,
               ActionKind::categorical);
    buffer.clear();
  }
  return result;
}

}  // namespace shepherd::rl
