// Command-line front end: config loading, subcommand dispatch, checkpoint
// management, and plot emission.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shepherd/config.hpp"
#include "shepherd/plot.hpp"

namespace fs = std::filesystem;
using shepherd::config::json;

namespace {

void write_learning_curve_csv(const std::string& path, const std::vector<double>& rewards,
                              int window) {
  std::ofstream f = shepherd::harness::open_out(path);
  f << "episode_index,cumulative_reward,moving_average\n";
  double running = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    running += rewards[i];
    if (i >= static_cast<std::size_t>(window)) running -= rewards[i - window];
    const double ma = running / std::min<std::size_t>(i + 1, window);
    f << i << ',' << shepherd::harness::fmt_double(rewards[i]) << ','
      << shepherd::harness::fmt_double(ma) << '\n';
  }
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> episodes;
  std::string checkpoint;
};

void add_common(CLI::App* sc, CommonFlags& f) {
  sc->add_option("--config", f.config_path, "configuration file (JSON)");
  sc->add_option("--out", f.out_dir, "output directory")->capture_default_str();
  sc->add_option("--set", f.sets, "override a config key, e.g. --set sim.D=0.2");
  sc->add_option("--seed", f.seed, "base seed (experiment.base_seed)");
  sc->add_option("--episodes", f.episodes, "episode count for this subcommand");
  sc->add_option("--checkpoint", f.checkpoint, "driving-policy checkpoint path");
}

// Built-in per-subcommand defaults, applied before the config file and any
// --set overrides.
json build_config(const std::string& subcommand, const CommonFlags& f) {
  json root = shepherd::config::default_config();
  std::vector<std::string> presets;
  if (subcommand == "train-driving")
    presets = {"experiment.scenario=drive-1v1", "sim.num_herders=1", "sim.num_targets=1",
               "episode.max_steps=1200"};
  else if (subcommand == "robustness")
    presets = {"perturbation.enabled=true"};
  else if (subcommand == "scale")
    presets = {"experiment.scenario=scale", "experiment.controller=learned",
               "sim.num_herders=10", "sim.num_targets=100", "experiment.episodes=1"};
  for (const auto& p : presets) shepherd::config::apply_override(root, p);

  if (!f.config_path.empty())
    shepherd::config::merge_into(root, shepherd::config::load_file(f.config_path));
  for (const auto& s : f.sets) shepherd::config::apply_override(root, s);

  if (f.seed) root["experiment"]["base_seed"] = *f.seed;
  if (f.episodes) {
    root["experiment"]["episodes"] = *f.episodes;
    if (subcommand == "train-driving") root["ppo"]["total_episodes"] = *f.episodes;
    if (subcommand == "train-selection") root["mappo"]["total_episodes"] = *f.episodes;
  }
  if (!f.checkpoint.empty()) root["checkpoints"]["driving"] = f.checkpoint;
  return root;
}

void run_train_driving(const shepherd::config::Resolved& r, const std::string& out) {
  const std::uint64_t seed = r.experiment.base_seed;
  const shepherd::rl::TrainResult tr = shepherd::rl::train_driving(
      r.ppo, r.experiment.sim, r.experiment.episode, seed, r.gains);
  shepherd::nn::save_checkpoint(out + "/driving_actor.ckpt", tr.actor);
  shepherd::nn::save_checkpoint(out + "/driving_critic.ckpt", tr.critic);
  write_learning_curve_csv(out + "/learning_curve.csv", tr.episode_rewards, 200);
  std::printf("trained driving policy over %zu episodes\n", tr.episode_rewards.size());
}

void run_train_selection(const shepherd::config::Resolved& r, const std::string& out) {
  if (r.experiment.driving_checkpoint.empty())
    throw std::invalid_argument("train-selection needs --checkpoint (checkpoints.driving)");
  shepherd::nn::MlpParams driving;
  try {
    driving = shepherd::nn::load_checkpoint(r.experiment.driving_checkpoint);
  } catch (const std::exception& e) {
    throw std::invalid_argument("checkpoints.driving: " + std::string(e.what()));
  }
  const shepherd::rl::TrainResult tr = shepherd::rl::train_selection(
      r.mappo, r.experiment.sim, r.experiment.episode,
      shepherd::rl::make_driving_fn(std::move(driving)), r.experiment.base_seed, r.gains);
  shepherd::nn::save_checkpoint(out + "/selection_actor.ckpt", tr.actor);
  shepherd::nn::save_checkpoint(out + "/selection_critic.ckpt", tr.critic);
  write_learning_curve_csv(out + "/learning_curve.csv", tr.episode_rewards, 2000);
  std::printf("trained selection policy over %zu episodes\n", tr.episode_rewards.size());
}

void write_validation_outputs(const shepherd::harness::ValidationResult& res,
                              const std::string& out) {
  shepherd::harness::write_episodes_csv(out + "/episodes.csv", res.rows);
  shepherd::harness::write_report_txt(out + "/report.txt", res.report);
  shepherd::config::write_report_json(out + "/report.json", res.report);
  for (const auto& c : res.report.controllers)
    std::printf("%s: %zu episodes, success rate %.4f\n", c.name.c_str(), c.episodes,
                c.success_rate);
}

void run_plot(const shepherd::config::Resolved& r, const std::string& out) {
  const json& p = r.raw.at("plot");
  bool any = false;
  if (const std::string in = p.at("learning_curve"); !in.empty()) {
    shepherd::plot::write_text_file(
        out + "/learning_curve.svg",
        shepherd::plot::learning_curve_svg(shepherd::plot::read_learning_curve_csv(in)));
    any = true;
  }
  if (const std::string in = p.at("episodes"); !in.empty()) {
    const auto rows = shepherd::plot::read_episodes_csv(in);
    std::vector<std::string> names;
    for (const auto& row : rows)
      if (std::find(names.begin(), names.end(), row.controller) == names.end())
        names.push_back(row.controller);
    std::vector<std::pair<std::string, shepherd::stats::SampleSummary>> path_groups,
        settle_groups;
    for (const auto& name : names) {
      std::vector<double> paths, settles;
      for (const auto& row : rows) {
        if (row.controller != name) continue;
        paths.push_back(row.path_length);
        if (row.n_star) settles.push_back(*row.n_star);
      }
      if (!paths.empty()) path_groups.emplace_back(name, shepherd::stats::summarize(paths));
      if (!settles.empty()) settle_groups.emplace_back(name, shepherd::stats::summarize(settles));
    }
    shepherd::plot::write_text_file(out + "/path_length_box.svg",
                                    shepherd::plot::box_plot_svg(path_groups, "path length"));
    if (!settle_groups.empty())
      shepherd::plot::write_text_file(
          out + "/settling_time_box.svg",
          shepherd::plot::box_plot_svg(settle_groups, "settling time"));
    any = true;
  }
  if (const std::string in = p.at("scale_trace"); !in.empty()) {
    shepherd::plot::write_text_file(
        out + "/radius_trace.svg",
        shepherd::plot::radius_trace_svg(shepherd::plot::read_scale_csv(in)));
    any = true;
  }
  if (const std::string in = p.at("final_state"); !in.empty()) {
    const auto& sim = r.experiment.sim;
    shepherd::plot::write_text_file(
        out + "/trajectory.svg",
        shepherd::plot::trajectory_svg(shepherd::plot::read_final_state_csv(in), sim.goal_radius,
                                       sim.buffered_goal_radius(), sim.arena_half_width));
    any = true;
  }
  if (!any)
    throw std::invalid_argument(
        "plot: no inputs configured (set plot.learning_curve, plot.episodes, plot.scale_trace, "
        "or plot.final_state)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shepherding-control laboratory"};
  app.require_subcommand(1);
  const std::vector<std::string> names = {"train-driving", "train-selection", "validate",
                                          "robustness",    "scale",           "plot"};
  const std::vector<std::string> descriptions = {
      "train the low-level driving policy (PPO, 1v1)",
      "train the shared target-selection policy (MAPPO, 2v5)",
      "seeded validation batch with aggregate report",
      "validation under parametric perturbation",
      "large-scale containment demo with truncated perception",
      "render SVG figures from result CSVs"};
  std::vector<CommonFlags> flags(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    add_common(app.add_subcommand(names[i], descriptions[i]), flags[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const CommonFlags& f = flags[std::find(names.begin(), names.end(), name) - names.begin()];

  json root;
  shepherd::config::Resolved resolved;
  try {
    root = build_config(name, f);
    resolved = shepherd::config::resolve(root);
    fs::create_directories(f.out_dir);
    shepherd::config::echo_config(root, f.out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  }

  try {
    if (name == "train-driving") {
      run_train_driving(resolved, f.out_dir);
    } else if (name == "train-selection") {
      run_train_selection(resolved, f.out_dir);
    } else if (name == "validate") {
      write_validation_outputs(shepherd::harness::run_validation(resolved.experiment), f.out_dir);
    } else if (name == "robustness") {
      write_validation_outputs(shepherd::harness::run_robustness(resolved.experiment), f.out_dir);
    } else if (name == "scale") {
      const shepherd::harness::ScaleResult res =
          shepherd::harness::run_scale_demo(resolved.experiment);
      shepherd::harness::write_scale_csv(f.out_dir + "/scale_trace.csv", res.rows);
      shepherd::harness::write_final_state_csv(f.out_dir + "/final_state.csv", res.final_state);
      std::printf("scale demo: %zu steps, final chi %.4f\n", res.rows.size(),
                  res.rows.back().chi);
    } else if (name == "plot") {
      run_plot(resolved, f.out_dir);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
