#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "shepherd/env.hpp"
#include "shepherd/heuristic.hpp"
#include "shepherd/hierarchy.hpp"
#include "shepherd/nn.hpp"
#include "shepherd/rl.hpp"
#include "shepherd/stats.hpp"

namespace shepherd::harness {

enum class Scenario { drive_1v1, select_2v5, scale };
enum class ControllerKind { heuristic, learned, both };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::drive_1v1: return "drive-1v1";
    case Scenario::select_2v5: return "select-2v5";
    default: return "scale";
  }
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "drive-1v1") return Scenario::drive_1v1;
  if (s == "select-2v5") return Scenario::select_2v5;
  if (s == "scale") return Scenario::scale;
  throw std::invalid_argument("experiment.scenario: unknown value '" + s + "'");
}

inline std::string to_string(ControllerKind c) {
  switch (c) {
    case ControllerKind::heuristic: return "heuristic";
    case ControllerKind::learned: return "learned";
    default: return "both";
  }
}

inline ControllerKind controller_from_string(const std::string& s) {
  if (s == "heuristic") return ControllerKind::heuristic;
  if (s == "learned") return ControllerKind::learned;
  if (s == "both") return ControllerKind::both;
  throw std::invalid_argument("experiment.controller: unknown value '" + s + "'");
}

struct Perturbation {
  bool enabled = false;
  double std_fraction = 0.30;  // sigma_f

  void validate() const {
    if (std_fraction < 0.0 || std_fraction >= 1.0)
      throw std::invalid_argument("perturbation.std_fraction must lie in [0, 1)");
  }
};

struct ExperimentConfig {
  Scenario scenario = Scenario::select_2v5;
  ControllerKind controller = ControllerKind::heuristic;
  std::int64_t episodes = 100;
  std::uint64_t base_seed = 0;
  int eval_action_hold = 1;  // decisions are re-taken every step at evaluation
  SimParams sim;
  EpisodeConfig episode;
  Perturbation perturbation;
  HeuristicParams heuristic;
  SensingConfig sensing;
  std::string driving_checkpoint;
  std::string selection_checkpoint;

  ExperimentConfig() {
    sim.num_herders = 2;
    sim.num_targets = 5;
    episode.max_steps = 3000;
  }

  void validate() const {
    if (episodes < 1) throw std::invalid_argument("experiment.episodes must be >= 1");
    if (eval_action_hold < 1)
      throw std::invalid_argument("experiment.eval_action_hold must be >= 1");
    perturbation.validate();
    episode.validate();
    heuristic.validate();
    sim.validate();
    if (scenario == Scenario::drive_1v1 && (sim.num_herders != 1 || sim.num_targets != 1))
      throw std::invalid_argument(
          "experiment.scenario drive-1v1 requires sim.num_herders=1 and sim.num_targets=1");
    if (scenario == Scenario::select_2v5 && (sim.num_herders != 2 || sim.num_targets != 5))
      throw std::invalid_argument(
          "experiment.scenario select-2v5 requires sim.num_herders=2 and sim.num_targets=5");
    // sensing only drives the hierarchical controller, which the single-target
    // scenario never builds
    if (scenario != Scenario::drive_1v1 &&
        (scenario == Scenario::scale || controller != ControllerKind::heuristic))
      sensing.validate(sim);
  }
};

// Low-level policy alone in the single-target scenario: the herder chases the
// only target with the deterministic scaled-tanh command.
class DrivingNetController : public Controller {
 public:
  explicit DrivingNetController(nn::MlpParams actor)
      : drive_(rl::make_driving_fn(std::move(actor))) {}
  void reset(const WorldState&, const SimParams&) override {}
  std::vector<Vec2> commands(const WorldState& s, const SimParams& p) override {
    return {drive_(s.herders[0], s.targets[0], p)};
  }

 private:
  std::function<Vec2(Vec2, Vec2, const SimParams&)> drive_;
};

struct LoadedPolicies {
  nn::MlpParams driving;
  nn::MlpParams selection;
  bool has_selection = false;
};

/// Loads every checkpoint the configured learned controller needs; failures
/// surface as configuration errors before any episode runs.
inline LoadedPolicies load_policies(const ExperimentConfig& config) {
  LoadedPolicies out;
  if (config.driving_checkpoint.empty())
    throw std::invalid_argument("checkpoints.driving is required for learned controllers");
  try {
    out.driving = nn::load_checkpoint(config.driving_checkpoint);
  } catch (const std::exception& e) {
    throw std::invalid_argument("checkpoints.driving: " + std::string(e.what()));
  }
  if (config.scenario != Scenario::drive_1v1) {
    if (config.selection_checkpoint.empty())
      throw std::invalid_argument("checkpoints.selection is required for learned controllers");
    try {
      out.selection = nn::load_checkpoint(config.selection_checkpoint);
    } catch (const std::exception& e) {
      throw std::invalid_argument("checkpoints.selection: " + std::string(e.what()));
    }
    out.has_selection = true;
  }
  return out;
}

inline std::unique_ptr<Controller> make_controller(const std::string& name,
                                                   const ExperimentConfig& config,
                                                   const LoadedPolicies& policies) {
  if (name == "heuristic") return std::make_unique<HeuristicController>(config.heuristic);
  if (config.scenario == Scenario::drive_1v1)
    return std::make_unique<DrivingNetController>(policies.driving);
  return std::make_unique<HierarchicalController>(policies.selection, policies.driving,
                                                  config.sensing, config.eval_action_hold);
}

/// Per-episode target-side parameter uncertainty: D, lambda, k^T drawn from
/// Normal(nominal, sigma_f * nominal), non-positive draws rejected.
inline SimParams perturbed_params(const SimParams& nominal, const Perturbation& pert,
                                  RngStream& rng) {
  SimParams p = nominal;
  if (!pert.enabled) return p;
  auto draw = [&](double v) {
    double out;
    do {
      out = v + pert.std_fraction * v * rng.normal();
    } while (out <= 0.0);
    return out;
  };
  p.diffusion = draw(nominal.diffusion);
  p.repulsion_range = draw(nominal.repulsion_range);
  p.repulsion_gain = draw(nominal.repulsion_gain);
  return p;
}

struct EpisodeRow {
  std::int64_t episode_index = 0;
  std::uint64_t seed = 0;
  std::string controller;
  EpisodeRecord record;
  SimParams sim;  // the (possibly perturbed) parameters this episode ran under
};

struct ControllerReport {
  std::string name;
  std::size_t episodes = 0;
  double success_rate = 0.0;
  std::optional<stats::SampleSummary> settling;  // over episodes with a settling time
  std::optional<stats::SampleSummary> path;
  std::size_t escape_speed_violations = 0;  // episodes where v_H <= k^T * lambda
};

struct Comparison {
  std::string metric;
  double u = 0.0;
  double p = 1.0;
};

struct BatchReport {
  std::vector<ControllerReport> controllers;
  std::vector<Comparison> comparisons;
};

/// Pure function of the episode rows; recomputable from the persisted CSV.
inline BatchReport aggregate(const std::vector<EpisodeRow>& rows) {
  BatchReport report;
  std::vector<std::string> names;
  for (const auto& r : rows)
    if (std::find(names.begin(), names.end(), r.controller) == names.end())
      names.push_back(r.controller);

  std::vector<std::vector<double>> settling_by(names.size()), path_by(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    ControllerReport cr;
    cr.name = names[c];
    std::size_t ok = 0;
    for (const auto& r : rows) {
      if (r.controller != names[c]) continue;
      ++cr.episodes;
      ok += r.record.success ? 1 : 0;
      if (r.record.settling_time)
        settling_by[c].push_back(static_cast<double>(*r.record.settling_time));
      path_by[c].push_back(r.record.path_length);
      if (r.sim.herder_max_speed <= r.sim.target_escape_speed()) ++cr.escape_speed_violations;
    }
    cr.success_rate = cr.episodes ? static_cast<double>(ok) / cr.episodes : 0.0;
    if (!settling_by[c].empty()) cr.settling = stats::summarize(settling_by[c]);
    if (!path_by[c].empty()) cr.path = stats::summarize(path_by[c]);
    report.controllers.push_back(std::move(cr));
  }

  if (names.size() == 2) {
    if (!settling_by[0].empty() && !settling_by[1].empty()) {
      const auto [u, p] = stats::mann_whitney_u(settling_by[0], settling_by[1]);
      report.comparisons.push_back({"settling_time", u, p});
    }
    if (!path_by[0].empty() && !path_by[1].empty()) {
      const auto [u, p] = stats::mann_whitney_u(path_by[0], path_by[1]);
      report.comparisons.push_back({"path_length", u, p});
    }
  }
  return report;
}

struct ValidationResult {
  std::vector<EpisodeRow> rows;
  BatchReport report;
};

/// Seeded validation batch. Episode i runs from seed base_seed + i for every
/// controller variant, so variants see identical initial conditions and target
/// noise seed-by-seed. Episodes run in parallel; rows come back in episode
/// order, so the aggregate is independent of scheduling.
inline ValidationResult run_validation(const ExperimentConfig& config) {
  config.validate();
  const bool want_heuristic = config.controller != ControllerKind::learned;
  const bool want_learned = config.controller != ControllerKind::heuristic;
  LoadedPolicies policies;
  if (want_learned) policies = load_policies(config);

  std::vector<std::string> names;
  if (want_heuristic) names.push_back("heuristic");
  if (want_learned) names.push_back("learned");
  const std::size_t per = names.size();

  std::vector<EpisodeRow> rows(static_cast<std::size_t>(config.episodes) * per);
  std::atomic<std::int64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= config.episodes) return;
      try {
        const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(i);
        RngStream perturb_rng(seed, 3);
        const SimParams sim = perturbed_params(config.sim, config.perturbation, perturb_rng);
        for (std::size_t c = 0; c < per; ++c) {
          std::unique_ptr<Controller> ctrl = make_controller(names[c], config, policies);
          RngStream init(seed), noise(seed, 1);
          EpisodeRow& row = rows[static_cast<std::size_t>(i) * per + c];
          row.episode_index = i;
          row.seed = seed;
          row.controller = names[c];
          row.sim = sim;
          row.record = run_episode(*ctrl, config.episode, sim, init, noise);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t n_threads =
      std::min<std::size_t>(hw ? hw : 1, static_cast<std::size_t>(config.episodes));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t + 1 < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  ValidationResult out{std::move(rows), {}};
  out.report = aggregate(out.rows);
  return out;
}

/// Validation under parametric perturbation (the enabled flag is forced on).
inline ValidationResult run_robustness(ExperimentConfig config) {
  config.perturbation.enabled = true;
  return run_validation(config);
}

struct ScaleRow {
  std::int64_t step = 0;
  double mean_radius = 0;
  double std_radius = 0;
  double min_radius = 0;
  double max_radius = 0;
  double chi = 0;
};

struct ScaleResult {
  std::vector<ScaleRow> rows;
  EpisodeRecord record;
  WorldState final_state;
};

/// Single-episode containment demo for the hierarchical policy under
/// truncated perception; emits per-step statistics of the target radii.
inline ScaleResult run_scale_demo(const ExperimentConfig& config) {
  config.validate();
  const LoadedPolicies policies = load_policies(config);
  HierarchicalController ctrl(policies.selection, policies.driving, config.sensing,
                              config.eval_action_hold);
  ScaleResult out;
  EpisodeHooks hooks;
  hooks.observe = [&](const WorldState& s) {
    ScaleRow row;
    row.step = s.step_index;
    double sum = 0, sum2 = 0;
    row.min_radius = std::numeric_limits<double>::infinity();
    for (const Vec2& t : s.targets) {
      const double r = t.norm();
      sum += r;
      sum2 += r * r;
      row.min_radius = std::min(row.min_radius, r);
      row.max_radius = std::max(row.max_radius, r);
    }
    const double n = static_cast<double>(s.targets.size());
    row.mean_radius = sum / n;
    row.std_radius = std::sqrt(std::max(0.0, sum2 / n - row.mean_radius * row.mean_radius));
    row.chi = chi(s, config.sim);
    out.rows.push_back(row);
    out.final_state = s;
  };
  RngStream init(config.base_seed), noise(config.base_seed, 1);
  out.record = run_episode(ctrl, config.episode, config.sim, init, noise, hooks);
  return out;
}

// ---- file emission: stable %.17g formatting so re-runs are byte-identical ----

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  return f;
}

inline void write_episodes_csv(const std::string& path, const std::vector<EpisodeRow>& rows) {
  std::ofstream f = open_out(path);
  f << "episode_index,seed,controller,success,n_star,path_length,D,lambda,kT\n";
  for (const auto& r : rows) {
    f << r.episode_index << ',' << r.seed << ',' << r.controller << ','
      << (r.record.success ? 1 : 0) << ',';
    if (r.record.settling_time) f << *r.record.settling_time;
    f << ',' << fmt_double(r.record.path_length) << ',' << fmt_double(r.sim.diffusion) << ','
      << fmt_double(r.sim.repulsion_range) << ',' << fmt_double(r.sim.repulsion_gain) << '\n';
  }
}

inline void write_scale_csv(const std::string& path, const std::vector<ScaleRow>& rows) {
  std::ofstream f = open_out(path);
  f << "step,mean_radius,std_radius,min_radius,max_radius,chi\n";
  for (const auto& r : rows)
    f << r.step << ',' << fmt_double(r.mean_radius) << ',' << fmt_double(r.std_radius) << ','
      << fmt_double(r.min_radius) << ',' << fmt_double(r.max_radius) << ',' << fmt_double(r.chi)
      << '\n';
}

inline void write_final_state_csv(const std::string& path, const WorldState& state) {
  std::ofstream f = open_out(path);
  f << "kind,index,x,y\n";
  for (std::size_t i = 0; i < state.herders.size(); ++i)
    f << "herder," << i << ',' << fmt_double(state.herders[i].x) << ','
      << fmt_double(state.herders[i].y) << '\n';
  for (std::size_t i = 0; i < state.targets.size(); ++i)
    f << "target," << i << ',' << fmt_double(state.targets[i].x) << ','
      << fmt_double(state.targets[i].y) << '\n';
}

inline void append_summary_lines(std::ofstream& f, const std::string& label,
                                 const stats::SampleSummary& s) {
  f << "  " << label << ": count=" << s.count << " mean=" << fmt_double(s.mean)
    << " median=" << fmt_double(s.median) << " q1=" << fmt_double(s.q1)
    << " q3=" << fmt_double(s.q3) << " min=" << fmt_double(s.min)
    << " max=" << fmt_double(s.max) << '\n';
}

inline void write_report_txt(const std::string& path, const BatchReport& report) {
  std::ofstream f = open_out(path);
  for (const auto& c : report.controllers) {
    f << "controller " << c.name << ": episodes=" << c.episodes
      << " success_rate=" << fmt_double(c.success_rate)
      << " escape_speed_violations=" << c.escape_speed_violations << '\n';
    if (c.settling) append_summary_lines(f, "settling_time", *c.settling);
    if (c.path) append_summary_lines(f, "path_length", *c.path);
  }
  for (const auto& cmp : report.comparisons)
    f << "mann_whitney " << cmp.metric << ": U=" << fmt_double(cmp.u)
      << " p=" << fmt_double(cmp.p) << '\n';
}

}  // namespace shepherd::harness
