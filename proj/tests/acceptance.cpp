// Acceptance gate: one pass/fail line per criterion, non-zero exit on any
// failure. Heavy criteria run multi-threaded; everything is seeded.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "shepherd/config.hpp"
#include "shepherd/harness.hpp"
#include "shepherd/plot.hpp"

using namespace shepherd;

namespace {

int g_failures = 0;

void criterion(int index, const std::string& title,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", index, title.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

std::filesystem::path work_dir() {
  static const std::filesystem::path p = [] {
    auto d = std::filesystem::temp_directory_path() / "shepherd_acceptance";
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
  }();
  return p;
}

// ---- criterion 1: dynamics hand examples ----

bool dynamics_oracles(std::string& detail) {
  bool ok = true;
  ok &= repulsion(2.5, {1, 0}) == Vec2{1.5, 0};
  ok &= repulsion(2.5, {0, -2}) == Vec2{0, -0.5};
  ok &= repulsion(2.5, {2.5, 0}) == Vec2{0, 0};
  ok &= repulsion(2.5, {3, 0}) == Vec2{0, 0};
  ok &= repulsion(2.5, {0, 0}) == Vec2{0, 0};

  SimParams p;
  p.diffusion = 0.0;
  RngStream rng(0);
  WorldState s{{{9, 0}}, {{10, 0}}, 0};
  const auto moved = step_targets(s, p, rng);
  ok &= near(moved[0].x, 10.0 + 0.05 * 3.0 * 1.5) && near(moved[0].y, 0.0);

  WorldState far{{{0, 0}}, {{10, 0}}, 0};
  const auto unmoved = step_targets(far, p, rng);
  ok &= unmoved[0] == Vec2{10, 0};

  const Vec2 h1 = step_herder({0, 0}, {10, 0}, p);
  ok &= near(h1.x, 0.4) && near(h1.y, 0.0);  // saturated to v_H = 8, dt = 0.05
  const Vec2 h2 = step_herder({24.9, 0}, {8, 0}, p);
  ok &= near(h2.x, 25.0) && near(h2.y, 0.0);  // domain projection
  const Vec2 h3 = step_herder({1, 1}, {3, 4}, p);
  ok &= near(h3.x, 1.15) && near(h3.y, 1.2);  // unsaturated: |u| = 5 < 8
  return ok;
}

// ---- criterion 2: noise law ----

bool noise_law(std::string& detail) {
  SimParams p;
  p.repulsion_gain = 0.0;  // drift off; pure diffusion
  RngStream rng(12);
  const int n = 100000;
  double sum2 = 0.0;
  std::int64_t count = 0;
  for (int i = 0; i < n; ++i) {
    WorldState s{{{20, 20}}, {{0, 0}}, 0};  // re-centred so clamping never binds
    const auto moved = step_targets(s, p, rng);
    sum2 += moved[0].x * moved[0].x + moved[0].y * moved[0].y;
    count += 2;
  }
  const double var = sum2 / static_cast<double>(count);
  std::ostringstream os;
  os << "per-component variance " << var << " vs 0.05";
  detail = os.str();
  return std::abs(var - 0.05) / 0.05 < 0.05;
}

// ---- criterion 3: metric oracles ----

bool metric_oracles(std::string& detail) {
  RngStream rng(7);
  bool ok = true;

  for (int trial = 0; trial < 1000 && ok; ++trial) {
    // chi against a direct count
    SimParams p;
    p.num_targets = 1 + static_cast<int>(rng.uniform_index(8));
    WorldState s;
    s.herders.push_back({0, 0});
    int inside = 0;
    for (int a = 0; a < p.num_targets; ++a) {
      const Vec2 t{rng.uniform(-25, 25), rng.uniform(-25, 25)};
      s.targets.push_back(t);
      if (t.norm() <= p.buffered_goal_radius()) ++inside;
    }
    ok &= chi(s, p) == static_cast<double>(inside) / p.num_targets;

    // settling against a brute-force scan
    const std::int64_t n_h = 5 + rng.uniform_index(40);
    const std::int64_t n_t = 1 + rng.uniform_index(10);
    const std::int64_t len = 1 + rng.uniform_index(n_h + 1);
    std::vector<double> trace(len);
    for (double& v : trace) v = rng.uniform() < 0.6 ? 1.0 : rng.uniform();
    std::optional<std::int64_t> oracle;
    for (std::int64_t n = 0; n < len && !oracle; ++n) {
      const std::int64_t n_f = std::min(n + n_t, n_h);
      if (n_f >= len) break;
      bool held = true;
      for (std::int64_t k = n; k <= n_f; ++k)
        if (trace[k] < 0.99) held = false;
      if (held) oracle = n;
    }
    ok &= settling_time(trace, n_t, n_h) == oracle;

    // path length against a direct sum
    const int herders = 1 + static_cast<int>(rng.uniform_index(3));
    const int steps = 2 + static_cast<int>(rng.uniform_index(20));
    std::vector<std::vector<Vec2>> traces(herders);
    double total = 0;
    for (auto& tr : traces) {
      tr.push_back({rng.uniform(-25, 25), rng.uniform(-25, 25)});
      for (int k = 0; k < steps; ++k) {
        const Vec2 next{rng.uniform(-25, 25), rng.uniform(-25, 25)};
        total += (next - tr.back()).norm();
        tr.push_back(next);
      }
    }
    ok &= near(path_length(traces, steps), total / herders, 1e-12 * std::max(1.0, total));
  }
  return ok;
}

// ---- criteria 4 and 5: heuristic reproduction and robustness ----

harness::ExperimentConfig heuristic_batch(int herders, int targets, int max_steps) {
  harness::ExperimentConfig c;
  c.scenario = herders == 1 ? harness::Scenario::drive_1v1 : harness::Scenario::select_2v5;
  c.controller = harness::ControllerKind::heuristic;
  c.sim.num_herders = herders;
  c.sim.num_targets = targets;
  c.episode.max_steps = max_steps;
  c.episode.success_window = 200;
  c.episodes = 1000;
  return c;
}

bool heuristic_nominal(std::string& detail) {
  const double r1 =
      stats::success_rate([&] {
        std::vector<EpisodeRecord> recs;
        for (const auto& row : harness::run_validation(heuristic_batch(1, 1, 1200)).rows)
          recs.push_back(row.record);
        return recs;
      }());
  const double r2 =
      stats::success_rate([&] {
        std::vector<EpisodeRecord> recs;
        for (const auto& row : harness::run_validation(heuristic_batch(2, 5, 3000)).rows)
          recs.push_back(row.record);
        return recs;
      }());
  std::ostringstream os;
  os << "1v1 success " << r1 << ", 2v5 success " << r2;
  detail = os.str();
  return r1 >= 0.99 && r2 >= 0.99;
}

bool heuristic_robustness(std::string& detail) {
  harness::ExperimentConfig c = heuristic_batch(2, 5, 3000);
  c.perturbation.std_fraction = 0.30;
  const harness::ValidationResult res = harness::run_robustness(c);
  const double rate = res.report.controllers[0].success_rate;
  std::ostringstream os;
  os << "2v5 success under 30% perturbation: " << rate << " (band [0.74, 0.94]), "
     << res.report.controllers[0].escape_speed_violations << " escape-speed violations";
  detail = os.str();
  return rate >= 0.74 && rate <= 0.94;
}

// ---- criterion 6: GAE / surrogate / gradient oracles ----

rl::RolloutBuffer random_buffer(nn::MlpParams& actor, nn::MlpParams& critic, int count,
                                std::uint64_t seed) {
  RngStream rng(seed);
  rl::RolloutBuffer buf;
  for (int i = 0; i < count; ++i) {
    std::vector<double> obs(actor.input_size());
    for (double& v : obs) v = rng.normal();
    const auto head = nn::forward(actor, obs);
    std::vector<double> act(head.size());
    for (std::size_t j = 0; j < head.size(); ++j)
      act[j] = head[j] + std::exp(actor.log_std[j]) * rng.normal();
    buf.observations.push_back(obs);
    buf.actions.push_back(act);
    buf.log_probs.push_back(nn::gaussian_log_prob(head, actor.log_std, act));
    buf.rewards.push_back(rng.normal());
    buf.values.push_back(nn::forward(critic, obs)[0]);
    buf.dones.push_back(0);
    buf.advantages.push_back(rng.normal());
    buf.returns.push_back(rng.normal());
  }
  return buf;
}

bool rl_plumbing(std::string& detail) {
  bool ok = true;
  {
    const auto [adv, ret] = rl::compute_gae({1, 1}, {0, 0}, 0.0, {0, 0}, 0.98, 0.95);
    ok &= near(adv[1], 1.0) && near(adv[0], 1.931) && near(ret[0], 1.931) && near(ret[1], 1.0);
  }
  ok &= near(rl::ppo_surrogate(0.0, 0.0, 3.7, 0.2), 3.7);
  ok &= near(rl::ppo_surrogate(std::log(1.5), 0.0, 2.0, 0.2), 2.4);
  ok &= near(rl::ppo_surrogate(std::log(0.5), 0.0, -1.0, 0.2), -0.8);

  // finite-difference check of the batch actor loss on a width-<=8 net
  RngStream rng(8);
  nn::MlpParams actor =
      nn::init_mlp({3, 6, 2}, nn::Activation::tanh, nn::Activation::tanh, 0.5, true, rng);
  nn::MlpParams critic =
      nn::init_mlp({3, 6, 1}, nn::Activation::tanh, nn::Activation::linear, 1.0, false, rng);
  rl::PpoHyper hyper;
  hyper.entropy_coeff = 0.1;
  rl::RolloutBuffer buf = random_buffer(actor, critic, 6, 13);
  const auto adv = rl::normalize_advantages(buf.advantages);

  auto actor_loss = [&](const nn::MlpParams& a) {
    double total = 0.0;
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const auto mean = nn::forward(a, buf.observations[i]);
      const double lp = nn::gaussian_log_prob(mean, a.log_std, buf.actions[i]);
      total -= rl::ppo_surrogate(lp, buf.log_probs[i], adv[i], hyper.clip);
      total -= hyper.entropy_coeff * nn::gaussian_entropy(a.log_std);
    }
    return total / buf.size();
  };

  nn::Gradients grads = nn::Gradients::zeros_like(actor);
  nn::ForwardTrace trace;
  const double inv = 1.0 / buf.size();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const auto mean = nn::forward_traced(actor, buf.observations[i], trace);
    const double lp = nn::gaussian_log_prob(mean, actor.log_std, buf.actions[i]);
    const double ratio = std::exp(lp - buf.log_probs[i]);
    const double clipped = std::clamp(ratio, 1 - hyper.clip, 1 + hyper.clip);
    const double dsurr = ratio * adv[i] <= clipped * adv[i] ? ratio * adv[i] : 0.0;
    std::vector<double> d_mean(2), d_ls(2), upstream(2);
    nn::gaussian_log_prob_grads(mean, actor.log_std, buf.actions[i], d_mean, d_ls);
    for (int j = 0; j < 2; ++j) {
      upstream[j] = -dsurr * inv * d_mean[j];
      grads.log_std[j] += -dsurr * inv * d_ls[j] - hyper.entropy_coeff * inv;
    }
    nn::backward(actor, trace, upstream, grads);
  }

  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](double* param, double analytic) {
    const double saved = *param;
    *param = saved + h;
    const double up = actor_loss(actor);
    *param = saved - h;
    const double dn = actor_loss(actor);
    *param = saved;
    const double fd = (up - dn) / (2 * h);
    const double scale = std::max({1e-8, std::abs(fd), std::abs(analytic)});
    worst = std::max(worst, std::abs(fd - analytic) / scale);
  };
  for (std::size_t i = 0; i < actor.weights[0].a.size(); i += 2)
    probe(&actor.weights[0].a[i], grads.weights[0].a[i]);
  for (std::size_t i = 0; i < actor.weights[1].a.size(); ++i)
    probe(&actor.weights[1].a[i], grads.weights[1].a[i]);
  for (std::size_t i = 0; i < actor.biases[1].size(); ++i)
    probe(&actor.biases[1][i], grads.biases[1][i]);
  probe(&actor.log_std[0], grads.log_std[0]);
  probe(&actor.log_std[1], grads.log_std[1]);
  std::ostringstream os;
  os << "max gradient relative error " << worst;
  detail = os.str();
  return ok && worst < 1e-4;
}

// ---- criterion 7: learning signal smoke run ----

bool learning_signal(std::string& detail) {
  // short-episode configuration that learns within minutes; the exploration
  // bonus is dropped because a drifting log_std swamps the 500-episode window
  rl::PpoHyper hyper;
  hyper.entropy_coeff = 0.0;
  hyper.horizon = 512;
  hyper.total_episodes = 500;
  SimParams params;
  EpisodeConfig config;
  config.max_steps = 300;
  config.success_window = 200;

  auto run_seed = [&](std::uint64_t seed) {
    return rl::train_driving(hyper, params, config, seed).episode_rewards;
  };
  std::vector<std::future<std::vector<double>>> futures;
  for (std::uint64_t seed = 0; seed < 3; ++seed)
    futures.push_back(std::async(std::launch::async, run_seed, seed));

  bool ok = true;
  std::ostringstream os;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const std::vector<double> curve = futures[seed].get();
    const std::size_t fifth = curve.size() / 5;
    const std::vector<double> first(curve.begin(), curve.begin() + fifth);
    const std::vector<double> last(curve.end() - fifth, curve.end());
    const double m0 = stats::summarize(first).mean;
    const double m1 = stats::summarize(last).mean;
    const auto [u, p] = stats::mann_whitney_u(first, last);
    os << "seed " << seed << ": " << m0 << " -> " << m1 << " (p=" << p << ") ";
    ok &= m1 > m0 && p < 0.01;
  }
  detail = os.str();
  return ok;
}

// ---- criterion 8: shared-selection-policy structure ----

bool mappo_structure(std::string& detail) {
  bool ok = true;
  RngStream rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> logits(2 + rng.uniform_index(10));
    for (double& v : logits) v = rng.uniform(-30, 30);
    const auto probs = nn::categorical_probs(logits);
    double sum = 0;
    for (double v : probs) sum += v;
    ok &= near(sum, 1.0);
  }

  // one shared parameter set drives every herder, and training holds each
  // decision for action_hold steps: a short run must complete with a single
  // actor head sized to the target count
  SimParams params;
  params.num_herders = 2;
  params.num_targets = 5;
  EpisodeConfig config;
  config.max_steps = 200;
  config.success_window = 50;
  config.action_hold = 100;
  rl::PpoHyper hyper = rl::PpoHyper::selection_defaults();
  hyper.num_actors = 4;
  hyper.horizon = 8;
  hyper.minibatch_size = 32;
  hyper.epochs = 2;
  hyper.total_episodes = 4;
  RngStream drive_rng(1);
  const nn::MlpParams driving = nn::init_mlp({4, 16, 2}, nn::Activation::relu,
                                             nn::Activation::tanh, 0.01, true, drive_rng);
  const rl::TrainResult tr =
      rl::train_selection(hyper, params, config, rl::make_driving_fn(driving), 5);
  ok &= tr.actor.output_size() == 5;
  ok &= tr.episode_rewards.size() >= 4;

  // the hold window at the controller level: with full perception, the
  // selection changes only at decision steps during training-style rollout
  // (n_w = 100) and is re-taken every step at evaluation (n_w = 1)
  RngStream head_rng(2);
  const nn::MlpParams head = nn::init_mlp({14, 16, 5}, nn::Activation::relu,
                                          nn::Activation::linear, 0.5, false, head_rng);
  SensingConfig sensing{2, 5};
  {
    RngStream policy(4, 2), init(4), noise(4, 1);
    HierarchicalController ctrl(head, driving, sensing, 100, false, &policy);
    WorldState s = sample_initial(params, init);
    ctrl.reset(s, params);
    std::vector<int> previous;
    for (int k = 0; k < 350; ++k) {
      const auto u = ctrl.commands(s, params);
      if (k > 0 && k % 100 != 0) ok &= ctrl.current_selection() == previous;
      previous = ctrl.current_selection();
      for (std::size_t i = 0; i < s.herders.size(); ++i)
        s.herders[i] = step_herder(s.herders[i], u[i], params);
      step_targets(s, params, noise);
    }
  }
  {
    RngStream init(4), noise(4, 1);
    HierarchicalController ctrl(head, driving, sensing, 1);
    WorldState s = sample_initial(params, init);
    ctrl.reset(s, params);
    for (int k = 0; k < 50; ++k) {
      ctrl.commands(s, params);
      // evaluation re-decision every step: matches the fresh argmax
      for (int i = 0; i < 2; ++i) {
        const auto probs = nn::categorical_probs(
            nn::forward(head, topological_observe(s, i, sensing, params)));
        const int local = static_cast<int>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
        ok &= ctrl.current_selection()[i] == perceived_targets(s, i, sensing)[local];
      }
      step_targets(s, params, noise);
    }
  }
  return ok;
}

// ---- criterion 9: topological reduction and large-scale schema ----

bool topological_reduction(std::string& detail) {
  const auto dir = work_dir();
  RngStream rng(31);
  const nn::MlpParams driving = nn::init_mlp({4, 16, 2}, nn::Activation::relu,
                                             nn::Activation::tanh, 0.01, true, rng);
  const nn::MlpParams selection = nn::init_mlp({14, 32, 5}, nn::Activation::relu,
                                               nn::Activation::linear, 0.5, false, rng);
  const std::string dpath = (dir / "driving.ckpt").string();
  const std::string spath = (dir / "selection.ckpt").string();
  nn::save_checkpoint(dpath, driving);
  nn::save_checkpoint(spath, selection);

  harness::ExperimentConfig c;
  c.scenario = harness::Scenario::scale;
  c.controller = harness::ControllerKind::learned;
  c.sim.num_herders = 2;
  c.sim.num_targets = 5;
  c.sensing = {2, 5};
  c.episode.max_steps = 400;
  c.episode.success_window = 50;
  c.episodes = 1;
  c.base_seed = 42;
  c.driving_checkpoint = dpath;
  c.selection_checkpoint = spath;

  const harness::ScaleResult demo = harness::run_scale_demo(c);

  harness::ExperimentConfig v = c;
  v.scenario = harness::Scenario::select_2v5;
  const harness::ValidationResult val = harness::run_validation(v);
  const EpisodeRecord& a = demo.record;
  const EpisodeRecord& b = val.rows[0].record;
  bool ok = a.success == b.success && a.settling_time == b.settling_time &&
            a.path_length == b.path_length && a.chi_trace == b.chi_trace;

  harness::ExperimentConfig big = c;
  big.sim.num_herders = 10;
  big.sim.num_targets = 100;
  const harness::ScaleResult large = harness::run_scale_demo(big);
  const std::string csv = (dir / "scale_trace.csv").string();
  harness::write_scale_csv(csv, large.rows);
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  ok &= header == "step,mean_radius,std_radius,min_radius,max_radius,chi";
  ok &= large.rows.size() == large.record.chi_trace.size() && !large.rows.empty();
  std::ostringstream os;
  os << "2v5 trace bit-exact; 10v100 ran " << large.rows.size() - 1 << " steps, final chi "
     << large.rows.back().chi;
  detail = os.str();
  return ok;
}

// ---- criterion 10: exact rank-test enumeration ----

bool statistics_enumeration(std::string& detail) {
  RngStream rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(4);
    const std::size_t m = 2 + rng.uniform_index(std::min<std::size_t>(4, 10 - n - 1));
    std::vector<double> x(n), y(m);
    for (double& v : x) v = static_cast<double>(rng.uniform_index(6));
    for (double& v : y) v = static_cast<double>(rng.uniform_index(6));
    const auto [u, p] = stats::mann_whitney_u(x, y);

    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> ranks(pooled.size());
    for (std::size_t i = 0; i < pooled.size();) {
      std::size_t j = i;
      while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
      for (std::size_t k = i; k <= j; ++k) ranks[k] = 0.5 * (i + j) + 1.0;
      i = j + 1;
    }
    int count = 0, le = 0, ge = 0;
    const std::size_t total = n + m;
    for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
      double rs = 0;
      for (std::size_t i = 0; i < total; ++i)
        if (mask & (1u << i)) rs += ranks[i];
      ++count;
      const double uu = rs - n * (n + 1) / 2.0;
      if (uu <= u + 1e-9) ++le;
      if (uu >= u - 1e-9) ++ge;
    }
    const double p_oracle =
        std::min(1.0, 2.0 * std::min(le, ge) / static_cast<double>(count));
    if (std::abs(p - p_oracle) > 1e-9) {
      detail = "p mismatch against enumeration";
      return false;
    }
  }
  return true;
}

// ---- criterion 11: CLI re-run determinism ----

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

bool cli_determinism(std::string& detail) {
  const char* cli = std::getenv("SHEPHERD_CLI");
  if (!cli || !*cli) {
    detail = "SHEPHERD_CLI not set";
    return false;
  }
  const auto dir = work_dir();
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  const std::string a = (dir / "cli_a").string(), b = (dir / "cli_b").string(),
                    c = (dir / "cli_c").string(), ra = (dir / "cli_ra").string(),
                    rb = (dir / "cli_rb").string();
  bool ok = true;
  ok &= run("validate --episodes 5 --seed 9 --out " + a);
  ok &= run("validate --episodes 5 --seed 9 --out " + b);
  // and again from the echoed config alone
  ok &= run("validate --config " + a + "/config.json --out " + c);
  ok &= run("robustness --episodes 3 --seed 4 --out " + ra);
  ok &= run("robustness --episodes 3 --seed 4 --out " + rb);
  if (!ok) {
    detail = "a subcommand exited non-zero";
    return false;
  }
  for (const char* name : {"episodes.csv", "report.txt", "report.json"}) {
    const std::string fa = slurp(std::filesystem::path(a) / name);
    ok &= !fa.empty();
    ok &= fa == slurp(std::filesystem::path(b) / name);
    ok &= fa == slurp(std::filesystem::path(c) / name);
    ok &= slurp(std::filesystem::path(ra) / name) == slurp(std::filesystem::path(rb) / name);
  }
  ok &= !slurp(std::filesystem::path(ra) / "episodes.csv").empty();
  detail = "validate x3 and robustness x2 byte-identical";
  return ok;
}

}  // namespace

int main() {
  criterion(1, "dynamics oracles (repulsion, target/herder steps)", dynamics_oracles);
  criterion(2, "noise law: per-component step variance = 2 D dt", noise_law);
  criterion(3, "metric oracles (chi, settling time, path length)", metric_oracles);
  criterion(4, "heuristic nominal reproduction (1000 episodes each)", heuristic_nominal);
  criterion(5, "heuristic robustness at 30% perturbation", heuristic_robustness);
  criterion(6, "policy-gradient plumbing oracles and gradient check", rl_plumbing);
  criterion(7, "learning signal on the smoke-scale driving run", learning_signal);
  criterion(8, "shared selection policy: structure and decision hold", mappo_structure);
  criterion(9, "topological reduction and large-scale schema", topological_reduction);
  criterion(10, "rank test matches exact enumeration", statistics_enumeration);
  criterion(11, "CLI re-runs are byte-identical", cli_determinism);
  if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
