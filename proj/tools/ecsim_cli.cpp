// Command-line experiment runner.
//
//   ecsim baseline --config default.cfg --out baseline.csv
//   ecsim train    --config default.cfg --checkpoint agent.ckpt
//   ecsim evaluate --config default.cfg --checkpoint agent.ckpt --out sa.csv
//   ecsim sweep    --config default.cfg [--checkpoint agent.ckpt] --out all.csv
//   ecsim plot     baseline.csv sa.csv --out virality.svg

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecsim/ecsim.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::optional<std::size_t> replicates;
  std::string checkpoint_path;
  std::size_t jobs = 1;
  std::optional<std::size_t> episodes;
  std::string runs_out_path;
  std::vector<std::string> csv_inputs;
};

ecsim::ExperimentConfig load(const Options& o) {
  ecsim::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = ecsim::load_config(o.config_path);
  if (o.seed) cfg.sim.seed = *o.seed;
  if (o.replicates) cfg.replicates = *o.replicates;
  if (o.episodes) cfg.dqn.episodes = *o.episodes;
  return cfg;
}

void write_result(const ecsim::SweepResult& result, const Options& o) {
  if (o.out_path.empty()) {
    std::cout << ecsim::to_csv(result);
  } else {
    ecsim::emit_csv(result, o.out_path);
  }
  if (!o.runs_out_path.empty()) ecsim::write_file(o.runs_out_path, ecsim::to_runs_csv(result));
}

std::vector<ecsim::SweepResult> baseline_parts(const ecsim::ExperimentConfig& cfg, const Options& o) {
  std::vector<ecsim::SweepResult> parts;
  for (double p_o : cfg.p_o_values)
    parts.push_back(ecsim::run_baseline_sweep(
        ecsim::baseline_spec(cfg, p_o, cfg.sim.seed, cfg.replicates), o.jobs));
  return parts;
}

std::vector<ecsim::SweepResult> sa_parts(const ecsim::ExperimentConfig& cfg, const Options& o) {
  const ecsim::Checkpoint ck = ecsim::load_checkpoint(o.checkpoint_path);
  std::vector<ecsim::SweepResult> parts;
  for (double p_o : cfg.p_o_values)
    for (std::size_t delay : cfg.sa_delays)
      parts.push_back(ecsim::run_sa_sweep(
          ecsim::sa_spec(cfg, p_o, delay, cfg.sim.seed, cfg.replicates), ck.net, o.jobs));
  return parts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo-chamber fake-news simulator with a deep Q-learning Super-Agent"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path, "Configuration file (key = value)");
    cmd->add_option("--seed", o.seed, "Master seed (overrides the config's seed)");
    cmd->add_option("--out", o.out_path, "Output path");
    cmd->add_option("--replicates", o.replicates, "Replicates per grid point")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--checkpoint", o.checkpoint_path, "Super-Agent checkpoint");
    cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* baseline = app.add_subcommand("baseline", "Virality sweep without the Super-Agent");
  auto* train = app.add_subcommand("train", "Train a Super-Agent and write a checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "Virality sweep with a trained Super-Agent");
  auto* sweep = app.add_subcommand("sweep", "Baseline sweep, plus Super-Agent sweeps if --checkpoint is given");
  auto* plot = app.add_subcommand("plot", "Render sweep CSVs as an SVG virality chart");
  for (auto* cmd : {baseline, train, evaluate, sweep, plot}) add_common(cmd);
  for (auto* cmd : {baseline, evaluate, sweep})
    cmd->add_option("--runs-out", o.runs_out_path, "Also write per-replicate final GC values");
  train->add_option("--episodes", o.episodes, "Training episodes")->check(CLI::PositiveNumber);
  plot->add_option("csv", o.csv_inputs, "Sweep CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (baseline->parsed()) {
      if (!o.checkpoint_path.empty()) throw ecsim::ConfigError("baseline does not take --checkpoint");
      write_result(ecsim::merge(baseline_parts(load(o), o)), o);
    } else if (evaluate->parsed()) {
      if (o.checkpoint_path.empty()) throw ecsim::ConfigError("evaluate requires --checkpoint");
      write_result(ecsim::merge(sa_parts(load(o), o)), o);
    } else if (sweep->parsed()) {
      const auto cfg = load(o);
      auto parts = baseline_parts(cfg, o);
      if (!o.checkpoint_path.empty())
        for (auto& p : sa_parts(cfg, o)) parts.push_back(std::move(p));
      write_result(ecsim::merge(std::move(parts)), o);
    } else if (train->parsed()) {
      const std::string path = !o.checkpoint_path.empty() ? o.checkpoint_path : o.out_path;
      if (path.empty()) throw ecsim::ConfigError("train requires --checkpoint or --out");
      const auto cfg = load(o);
      const auto result = ecsim::train(cfg, cfg.dqn.episodes, cfg.sim.seed);
      ecsim::save_checkpoint(result.checkpoint, path);
      const auto& r = result.episode_rewards;
      const std::size_t window = std::min<std::size_t>(50, r.size());
      double first = 0, last = 0;
      for (std::size_t i = 0; i < window; ++i) {
        first += r[i] / static_cast<double>(window);
        last += r[r.size() - window + i] / static_cast<double>(window);
      }
      std::cerr << "trained " << r.size() << " episodes, " << result.checkpoint.train_steps
                << " steps; mean episode reward first " << window << ": " << first << ", last "
                << window << ": " << last << "\n";
    } else if (plot->parsed()) {
      if (o.out_path.empty()) throw ecsim::ConfigError("plot requires --out");
      ecsim::plot_virality(o.csv_inputs, o.out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
