#pragma once

// Operations behind the command-line tool. Each reads its inputs, runs the
// library, and writes its artifacts into an output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prefcc/env.hpp"
#include "prefcc/experiment.hpp"

namespace prefcc {

// Overrides shared by the training-style commands.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<PerfMode> mode;
  bool expectation = false;  // deterministic simulator during training
};

struct TrainOfflineArgs {
  std::filesystem::path config;
  std::filesystem::path out;  // falls back to the config's output_dir
  RunOverrides overrides;
};

struct TrainOfflineReport {
  std::filesystem::path checkpoint;
  std::size_t log_rows = 0;
  std::size_t objectives = 0;
};

// Writes checkpoint.json, train_log.csv, sorted_objectives.txt and
// reward_matrix.json.
TrainOfflineReport cmd_train_offline(const TrainOfflineArgs& args);

struct AdaptArgs {
  std::filesystem::path checkpoint;
  WeightVector weights;
  int iterations = 0;
  std::filesystem::path out;
  // Link ranges when the checkpoint carries none.
  std::optional<std::filesystem::path> config;
  RunOverrides overrides;
};

inline constexpr int kSnapshotEvery = 8;

struct AdaptReport {
  std::filesystem::path checkpoint;
  int snapshots = 0;
};

// Writes adapt_curve.csv, snapshots/iter_NNNN.json every kSnapshotEvery
// iterations (and at the end), replay_rewards.csv for the objectives that
// were in the pool beforehand, and checkpoint.json.
AdaptReport cmd_adapt(const AdaptArgs& args);

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<PerfMode> mode;
};

// Writes reward_matrix.json and reward_cdf.csv; with a fairness section also
// fairness_trace.csv, fairness_jain.csv and fairness_summary.json; with
// friendliness enabled, friendliness.json.
void cmd_eval(const EvalArgs& args);

// Sorted objective list for a lattice step ("1/10" or "0.1") and bootstraps.
std::vector<WeightVector> cmd_sort_objectives(const std::string& step,
                                              const std::vector<WeightVector>& bootstraps);
// One "w_thr,w_lat,w_loss" line per objective.
void write_objective_list(std::ostream& out, const std::vector<WeightVector>& objectives);

}  // namespace prefcc
