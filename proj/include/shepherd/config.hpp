#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shepherd/harness.hpp"

namespace shepherd::config {

using nlohmann::json;

/// The built-in default tree mirrors the library defaults exactly; every
/// legal config key appears here, which is what makes unknown-key detection
/// possible during the merge.
inline json default_config() {
  const harness::ExperimentConfig e;
  const RewardGains g;
  const rl::PpoHyper ppo = rl::PpoHyper::driving_defaults();
  const rl::PpoHyper mappo = rl::PpoHyper::selection_defaults();
  auto hyper_section = [](const rl::PpoHyper& h) {
    return json{{"stepsize", h.stepsize},
                {"discount", h.discount},
                {"gae_lambda", h.gae_lambda},
                {"clip", h.clip},
                {"vf_coeff", h.vf_coeff},
                {"entropy_coeff", h.entropy_coeff},
                {"epochs", h.epochs},
                {"horizon", h.horizon},
                {"minibatch_size", h.minibatch_size},
                {"num_actors", h.num_actors},
                {"total_episodes", h.total_episodes}};
  };
  return json{
      {"experiment",
       {{"scenario", harness::to_string(e.scenario)},
        {"controller", harness::to_string(e.controller)},
        {"episodes", e.episodes},
        {"base_seed", e.base_seed},
        {"eval_action_hold", e.eval_action_hold}}},
      {"sim",
       {{"goal_radius", e.sim.goal_radius},
        {"arena_half_width", e.sim.arena_half_width},
        {"herder_max_speed", e.sim.herder_max_speed},
        {"D", e.sim.diffusion},
        {"lambda", e.sim.repulsion_range},
        {"kT", e.sim.repulsion_gain},
        {"dt", e.sim.dt},
        {"buffer_fraction", e.sim.buffer_fraction},
        {"num_herders", e.sim.num_herders},
        {"num_targets", e.sim.num_targets}}},
      {"episode",
       {{"max_steps", e.episode.max_steps},
        {"success_window", e.episode.success_window},
        {"action_hold", e.episode.action_hold}}},
      {"gains", {{"k1", g.k1}, {"k2", g.k2}, {"k3", g.k3}, {"k4", g.k4}}},
      {"ppo", hyper_section(ppo)},
      {"mappo", hyper_section(mappo)},
      {"heuristic",
       {{"standoff", e.heuristic.standoff},
        {"proportional_gain", e.heuristic.proportional_gain},
        {"capture_factor", e.heuristic.capture_factor}}},
      {"sensing", {{"n_herders", e.sensing.n_herders}, {"n_targets", e.sensing.n_targets}}},
      {"perturbation",
       {{"enabled", e.perturbation.enabled}, {"std_fraction", e.perturbation.std_fraction}}},
      {"checkpoints", {{"driving", ""}, {"selection", ""}}},
      {"plot",
       {{"learning_curve", ""},
        {"episodes", ""},
        {"scale_trace", ""},
        {"final_state", ""},
        {"window", 200}}},
  };
}

/// Overlays `patch` onto `base`, rejecting keys that do not already exist.
inline void merge_into(json& base, const json& patch, const std::string& prefix = "") {
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw std::invalid_argument("unknown config key: " + path);
    if (base[key].is_object()) {
      if (!value.is_object())
        throw std::invalid_argument("config key is a section, not a value: " + path);
      merge_into(base[key], value, path);
    } else {
      if (value.is_object())
        throw std::invalid_argument("config key is a value, not a section: " + path);
      base[key] = value;
    }
  }
}

/// Applies one dotted `section.key=value` override. The value is parsed as
/// JSON when possible and falls back to a plain string.
inline void apply_override(json& root, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must look like key=value: " + spec);
  const std::string dotted = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);

  json* node = &root;
  std::size_t start = 0;
  std::vector<std::string> parts;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    parts.push_back(dotted.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object())
      throw std::invalid_argument("unknown config key: " + dotted);
    node = &(*node)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!node->contains(leaf) || (*node)[leaf].is_object())
    throw std::invalid_argument("unknown config key: " + dotted);

  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded() || value.is_object()) value = raw;
  (*node)[leaf] = value;
}

inline json load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config file not found: " + path);
  try {
    return json::parse(f);
  } catch (const std::exception& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
}

struct Resolved {
  harness::ExperimentConfig experiment;
  RewardGains gains;
  rl::PpoHyper ppo;
  rl::PpoHyper mappo;
  json raw;
};

namespace detail {

template <typename T>
T get_key(const json& section, const std::string& section_name, const std::string& key) {
  try {
    return section.at(key).get<T>();
  } catch (const std::exception& e) {
    throw std::invalid_argument("config key " + section_name + "." + key + ": " + e.what());
  }
}

inline rl::PpoHyper read_hyper(const json& sec, const std::string& name, rl::PpoHyper h) {
  h.stepsize = get_key<double>(sec, name, "stepsize");
  h.discount = get_key<double>(sec, name, "discount");
  h.gae_lambda = get_key<double>(sec, name, "gae_lambda");
  h.clip = get_key<double>(sec, name, "clip");
  h.vf_coeff = get_key<double>(sec, name, "vf_coeff");
  h.entropy_coeff = get_key<double>(sec, name, "entropy_coeff");
  h.epochs = get_key<int>(sec, name, "epochs");
  h.horizon = get_key<int>(sec, name, "horizon");
  h.minibatch_size = get_key<int>(sec, name, "minibatch_size");
  h.num_actors = get_key<int>(sec, name, "num_actors");
  h.total_episodes = get_key<std::int64_t>(sec, name, "total_episodes");
  return h;
}

}  // namespace detail

/// Turns a fully-merged config tree into validated parameter structs.
inline Resolved resolve(const json& root) {
  using detail::get_key;
  Resolved r;
  r.raw = root;

  const json& ex = root.at("experiment");
  r.experiment.scenario =
      harness::scenario_from_string(get_key<std::string>(ex, "experiment", "scenario"));
  r.experiment.controller =
      harness::controller_from_string(get_key<std::string>(ex, "experiment", "controller"));
  r.experiment.episodes = get_key<std::int64_t>(ex, "experiment", "episodes");
  r.experiment.base_seed = get_key<std::uint64_t>(ex, "experiment", "base_seed");
  r.experiment.eval_action_hold = get_key<int>(ex, "experiment", "eval_action_hold");

  const json& sim = root.at("sim");
  SimParams& s = r.experiment.sim;
  s.goal_radius = get_key<double>(sim, "sim", "goal_radius");
  s.arena_half_width = get_key<double>(sim, "sim", "arena_half_width");
  s.herder_max_speed = get_key<double>(sim, "sim", "herder_max_speed");
  s.diffusion = get_key<double>(sim, "sim", "D");
  s.repulsion_range = get_key<double>(sim, "sim", "lambda");
  s.repulsion_gain = get_key<double>(sim, "sim", "kT");
  s.dt = get_key<double>(sim, "sim", "dt");
  s.buffer_fraction = get_key<double>(sim, "sim", "buffer_fraction");
  s.num_herders = get_key<int>(sim, "sim", "num_herders");
  s.num_targets = get_key<int>(sim, "sim", "num_targets");

  const json& ep = root.at("episode");
  r.experiment.episode.max_steps = get_key<int>(ep, "episode", "max_steps");
  r.experiment.episode.success_window = get_key<int>(ep, "episode", "success_window");
  r.experiment.episode.action_hold = get_key<int>(ep, "episode", "action_hold");

  const json& g = root.at("gains");
  r.gains.k1 = get_key<double>(g, "gains", "k1");
  r.gains.k2 = get_key<double>(g, "gains", "k2");
  r.gains.k3 = get_key<double>(g, "gains", "k3");
  r.gains.k4 = get_key<double>(g, "gains", "k4");

  r.ppo = detail::read_hyper(root.at("ppo"), "ppo", rl::PpoHyper::driving_defaults());
  r.mappo = detail::read_hyper(root.at("mappo"), "mappo", rl::PpoHyper::selection_defaults());

  const json& h = root.at("heuristic");
  r.experiment.heuristic.standoff = get_key<double>(h, "heuristic", "standoff");
  r.experiment.heuristic.proportional_gain = get_key<double>(h, "heuristic", "proportional_gain");
  r.experiment.heuristic.capture_factor = get_key<double>(h, "heuristic", "capture_factor");

  const json& sn = root.at("sensing");
  r.experiment.sensing.n_herders = get_key<int>(sn, "sensing", "n_herders");
  r.experiment.sensing.n_targets = get_key<int>(sn, "sensing", "n_targets");

  const json& pe = root.at("perturbation");
  r.experiment.perturbation.enabled = get_key<bool>(pe, "perturbation", "enabled");
  r.experiment.perturbation.std_fraction = get_key<double>(pe, "perturbation", "std_fraction");

  const json& ck = root.at("checkpoints");
  r.experiment.driving_checkpoint = get_key<std::string>(ck, "checkpoints", "driving");
  r.experiment.selection_checkpoint = get_key<std::string>(ck, "checkpoints", "selection");

  r.experiment.episode.validate();
  r.experiment.perturbation.validate();
  r.experiment.heuristic.validate();
  r.experiment.sim.validate();  // throws with the violated invariant named
  r.gains.validate();
  r.ppo.validate();
  r.mappo.validate();
  return r;
}

/// Writes the fully-resolved tree next to the run outputs; re-running from
/// this file reproduces the run bit-exactly.
inline void echo_config(const json& root, const std::string& out_dir) {
  std::ofstream f(out_dir + "/config.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write config echo in " + out_dir);
  f << root.dump(2) << '\n';
}

inline void write_report_json(const std::string& path, const harness::BatchReport& report) {
  auto summary_json = [](const stats::SampleSummary& s) {
    return json{{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"q1", s.q1},
                {"q3", s.q3},       {"min", s.min},   {"max", s.max}};
  };
  json out;
  out["controllers"] = json::array();
  for (const auto& c : report.controllers) {
    json jc{{"name", c.name},
            {"episodes", c.episodes},
            {"success_rate", c.success_rate},
            {"escape_speed_violations", c.escape_speed_violations}};
    if (c.settling) jc["settling_time"] = summary_json(*c.settling);
    if (c.path) jc["path_length"] = summary_json(*c.path);
    out["controllers"].push_back(std::move(jc));
  }
  out["comparisons"] = json::array();
  for (const auto& cmp : report.comparisons)
    out["comparisons"].push_back(json{{"metric", cmp.metric}, {"U", cmp.u}, {"p", cmp.p}});
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << out.dump(2) << '\n';
}

}  // namespace shepherd::config
