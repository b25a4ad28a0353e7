#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "prefcc/commands.hpp"
#include "prefcc/error.hpp"
#include "prefcc/experiment.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

prefcc::PerfMode parse_mode(const std::string& s) {
  if (s == "oracle") return prefcc::PerfMode::kOracle;
  return prefcc::PerfMode::kOnline;
}

std::vector<prefcc::WeightVector> parse_bootstraps(const std::string& text) {
  std::vector<prefcc::WeightVector> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(';', pos), text.size());
    out.push_back(prefcc::parse_weights(std::string_view(text).substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-conditioned congestion control training and evaluation"};
  app.require_subcommand(1);

  std::string config, out, checkpoint, weights, mode, step = "1/10", bootstraps;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool expectation = false;

  auto add_mode = [&](CLI::App* cmd) {
    cmd->add_option("--mode", mode, "Performance measures: oracle or online")
        ->check(CLI::IsMember({"oracle", "online"}));
  };

  CLI::App* train = app.add_subcommand("train-offline", "Two-phase offline training");
  train->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--out", out, "Output directory");
  add_mode(train);
  train->add_flag("--expectation", expectation, "Deterministic simulator");

  CLI::App* adapt = app.add_subcommand("adapt", "Online adaptation to a new preference");
  adapt->add_option("--checkpoint", checkpoint, "Input checkpoint")->required()->check(CLI::ExistingFile);
  adapt->add_option("--weights", weights, "w_thr,w_lat,w_loss")->required();
  adapt->add_option("--iterations", iterations, "Adaptation iterations")->required()
      ->check(CLI::NonNegativeNumber);
  adapt->add_option("--out", out, "Output directory")->required();
  adapt->add_option("--config", config, "Config providing link ranges")->check(CLI::ExistingFile);
  adapt->add_option("--seed", seed, "Override the rollout seed");
  add_mode(adapt);
  adapt->add_flag("--expectation", expectation, "Deterministic simulator");

  CLI::App* eval = app.add_subcommand("eval", "Scenario grid, reward CDF and fairness runs");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate")->required()->check(CLI::ExistingFile);
  eval->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "Output directory");
  eval->add_option("--seed", seed, "Override the evaluation seed");
  add_mode(eval);

  CLI::App* sort = app.add_subcommand("sort-objectives", "Print the objective traversal order");
  sort->add_option("--step", step, "Lattice step, e.g. 1/10 or 0.1");
  sort->add_option("--bootstraps", bootstraps, "Bootstrap vectors, ';'-separated");
  sort->add_option("--out", out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  auto overrides = [&](CLI::App* cmd) {
    prefcc::RunOverrides o;
    if (cmd->count("--seed") > 0) o.seed = seed;
    if (!mode.empty()) o.mode = parse_mode(mode);
    o.expectation = expectation;
    return o;
  };

  try {
    if (train->parsed()) {
      const auto report = prefcc::cmd_train_offline({config, out, overrides(train)});
      std::cout << "wrote " << report.checkpoint.string() << " (" << report.log_rows
                << " iterations, " << report.objectives << " objectives)\n";
    } else if (adapt->parsed()) {
      prefcc::WeightVector w;
      try {
        w = prefcc::parse_weights(weights);
      } catch (const prefcc::InvalidArgument& e) {
        std::cerr << "error: --weights: " << e.what() << "\n";
        return kUsageError;
      }
      prefcc::AdaptArgs a;
      a.checkpoint = checkpoint;
      a.weights = w;
      a.iterations = iterations;
      a.out = out;
      if (!config.empty()) a.config = config;
      a.overrides = overrides(adapt);
      const auto report = prefcc::cmd_adapt(a);
      std::cout << "wrote " << report.checkpoint.string() << " (" << report.snapshots
                << " snapshots)\n";
    } else if (eval->parsed()) {
      prefcc::EvalArgs a;
      a.checkpoint = checkpoint;
      a.config = config;
      a.out = out;
      if (eval->count("--seed") > 0) a.seed = seed;
      if (!mode.empty()) a.mode = parse_mode(mode);
      prefcc::cmd_eval(a);
    } else if (sort->parsed()) {
      std::vector<prefcc::WeightVector> boots = prefcc::default_bootstraps();
      if (!bootstraps.empty()) {
        try {
          boots = parse_bootstraps(bootstraps);
        } catch (const prefcc::InvalidArgument& e) {
          std::cerr << "error: --bootstraps: " << e.what() << "\n";
          return kUsageError;
        }
      }
      const auto list = prefcc::cmd_sort_objectives(step, boots);
      if (out.empty()) {
        prefcc::write_objective_list(std::cout, list);
      } else {
        std::ofstream f(out);
        if (!f) throw prefcc::Error("cannot write '" + out + "'");
        prefcc::write_objective_list(f, list);
      }
    }
  } catch (const prefcc::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
