#pragma once

// PPO training of the preference-conditioned actor-critic: rollout
// collection, discounted advantages, clipped surrogate with entropy bonus,
// two-phase offline training over the objective lattice, and online
// adaptation with requirement replay.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "prefcc/agent.hpp"
#include "prefcc/env.hpp"
#include "prefcc/netsim.hpp"
#include "prefcc/nn.hpp"
#include "prefcc/objective_graph.hpp"

namespace prefcc {

struct TrainConfig {
  double gamma = 0.99;
  double lr = nn::kDefaultLearningRate;
  double alpha = kDefaultActionScale;
  int history_len = kDefaultHistoryLen;
  double clip_eps = 0.2;
  double entropy_start = 1.0;
  double entropy_end = 0.1;
  int entropy_decay_iters = 1000;
  int episode_len = 50;
  int episodes_per_iter = 8;
  int epochs = 4;
  int minibatches = 4;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;
  double init_log_std = 0.0;
  // The policy log-std is projected onto [log_std_min, log_std_max] after
  // every update.
  double log_std_min = -3.0;
  double log_std_max = 0.0;
  // Episode start rate drawn uniformly from this range, in multiples of the
  // link capacity.
  double start_rate_min = 0.3;
  double start_rate_max = 1.5;
  PerfMode perf_mode = PerfMode::kOracle;
  SimMode sim_mode = SimMode::kStochastic;
  std::uint64_t seed = 1;
  int threads = 1;

  // Throws InvalidConfig on out-of-range values.
  void validate() const;
  EnvOptions env_options() const;
  double value_scale() const { return 1.0 / (1.0 - std::min(gamma, 0.999)); }
};

// Linear decay from entropy_start to entropy_end over entropy_decay_iters.
double entropy_coef(const TrainConfig& config, std::int64_t iteration);
double entropy_coef(std::int64_t iteration);

// Derives an independent generator for (seed, stream...) tuples.
std::mt19937_64 derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

// Source of link configurations, one per episode.
using LinkSource = std::function<LinkConfig(std::mt19937_64&)>;

LinkSource fixed_link(const LinkConfig& config);

struct Trajectory {
  WeightVector preference;
  std::vector<StateWindow> states;
  std::vector<ActionSample> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<PerfMeasures> measures;
  std::vector<MiOutcome> outcomes;
  // Critic value of the state after the last step; episodes are truncated,
  // not terminated, so returns are bootstrapped from it.
  double bootstrap_value = 0.0;

  std::size_t size() const { return rewards.size(); }
};

enum class PolicyMode {
  kSample,  // draw actions from the Gaussian
  kMean,    // act with mu
};

// `env` must already be reset. Deterministic given the env and `rng` state.
Trajectory collect_trajectory(Env& env, const ActorParams& actor, const CriticParams& critic,
                              int steps, std::mt19937_64& rng,
                              PolicyMode mode = PolicyMode::kSample);

// Discounted return-to-go, bootstrapped with `traj.bootstrap_value`.
std::vector<double> discounted_returns(const Trajectory& traj, double gamma);
// Return-to-go minus the critic estimate. Throws InvalidArgument if empty.
std::vector<double> advantages(const Trajectory& traj, double gamma);

// Flattened rollout data for gradient steps.
struct PpoBatch {
  BatchInputs inputs;
  Eigen::RowVectorXd actions;
  Eigen::RowVectorXd old_logp;
  Eigen::RowVectorXd advantages;
  Eigen::RowVectorXd returns;

  Eigen::Index size() const { return actions.size(); }
  static PpoBatch from_trajectories(std::span<const Trajectory> trajs, double gamma);
  PpoBatch subset(std::span<const Eigen::Index> idx) const;
  void normalize_advantages();
};

struct PpoResult {
  double objective = 0.0;  // surrogate + beta * entropy
  double surrogate = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  Eigen::VectorXd grad;    // ascent direction, ActorParams::flatten layout
};

// Mean clipped surrogate plus beta times the mean policy entropy, with its
// exact gradient. Throws NumericError on a non-finite probability ratio.
PpoResult ppo_objective(const ActorParams& actor, const PpoBatch& batch, double clip_eps,
                        double beta);

// Same objective without the clip; used to check clip inertness.
double unclipped_objective(const ActorParams& actor, const PpoBatch& batch, double beta);

// Average of the per-preference objectives: 1/2 [L(w_i) + L(w_j)].
PpoResult replay_objective(const ActorParams& actor, const PpoBatch& current,
                           const PpoBatch& replayed, double clip_eps, double beta);

struct CriticLoss {
  double loss = 0.0;       // mean squared error to the return targets
  Eigen::VectorXd grad;    // descent gradient, CriticParams::flatten layout
};

CriticLoss critic_loss(const CriticParams& critic, const BatchInputs& inputs,
                       const Eigen::RowVectorXd& targets);

// One Adam step on the squared error. Returns the loss before the step.
double critic_update(CriticParams& critic, nn::AdamState& opt, const BatchInputs& inputs,
                     const Eigen::RowVectorXd& targets, double lr, double max_grad_norm = 0.0);

// Everything that evolves during training.
struct Learner {
  TrainConfig config;
  ActorParams actor;
  CriticParams critic;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  std::int64_t iteration = 0;  // drives the entropy schedule

  static Learner create(const TrainConfig& config, const AgentSpec& spec = {});
  // Wraps existing parameters with fresh optimizer state.
  static Learner from_params(const TrainConfig& config, ActorParams actor, CriticParams critic,
                             std::int64_t iteration = 0);
};

struct IterationStats {
  std::int64_t iteration = 0;
  WeightVector preference;
  double mean_reward = 0.0;
  double mean_thr = 0.0;
  double mean_lat = 0.0;
  double mean_loss = 0.0;
  double surrogate = 0.0;
  double entropy_coef = 0.0;
  double critic_loss = 0.0;
  double log_std = 0.0;
};

// Collects episodes_per_iter trajectories for `w` under the current policy.
std::vector<Trajectory> collect_batch(const Learner& learner, const LinkSource& links,
                                      const WeightVector& w, std::uint64_t stream);

// One PPO iteration on `w`.
IterationStats train_iteration(Learner& learner, const LinkSource& links, const WeightVector& w);

// Runs `iterations` PPO iterations on a single objective.
std::vector<IterationStats> train_objective(Learner& learner, const LinkSource& links,
                                            const WeightVector& w, int iterations);

struct EvalOptions {
  int episodes = 4;
  int episode_len = 50;
  double start_rate_fraction = 0.5;
  PolicyMode mode = PolicyMode::kMean;
  SimMode sim_mode = SimMode::kExpectation;
  PerfMode perf_mode = PerfMode::kOracle;
  std::uint64_t seed = 12345;
};

struct EvalSummary {
  double mean_reward = 0.0;
  double mean_thr = 0.0;           // normalized throughput
  double mean_lat = 0.0;           // normalized latency measure
  double mean_throughput_pps = 0.0;
  double mean_latency_s = 0.0;
  double mean_loss_rate = 0.0;
};

EvalSummary evaluate_policy(const ActorParams& actor, const LinkSource& links,
                            const WeightVector& w, const EvalOptions& options,
                            const TrainConfig& config);

// Plateau test: mean of the last `window` entries improved by less than
// `tolerance` (relative) over the `window` entries before them.
bool has_plateaued(std::span<const double> curve, int window, double tolerance);

struct OfflineConfig {
  int lattice_denominator = 10;
  std::vector<WeightVector> bootstraps = default_bootstraps();
  int phase1_min_iters = 100;   // per bootstrap
  int phase1_max_iters = 1000;  // per bootstrap
  int plateau_window = 50;
  double plateau_tolerance = 0.01;
  int iters_per_objective = 10;
  int min_passes = 1;
  int max_passes = 20;
  EvalOptions eval;

  void validate() const;
};

struct RewardMatrixEntry {
  WeightVector preference;
  EvalSummary summary;
};

struct OfflineResult {
  std::vector<WeightVector> order;  // phase-2 visit order
  std::vector<SortedObjective> sorted;
  ObjectiveGraph graph;
  std::vector<IterationStats> log;
  int phase1_iters = 0;             // per bootstrap
  int phase2_passes = 0;
  std::vector<RewardMatrixEntry> reward_matrix;
};

OfflineResult offline_train(Learner& learner, const LinkSource& links, const OfflineConfig& config);

// Past requirements, FIFO-evicted beyond `capacity`, no duplicates.
class RequirementPool {
 public:
  explicit RequirementPool(std::size_t capacity = 256);

  // Returns false if an equal vector (within 1e-9) is already stored.
  bool insert(const WeightVector& w);
  bool contains(const WeightVector& w) const;
  const WeightVector& sample(std::mt19937_64& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const std::vector<WeightVector>& items() const { return items_; }

 private:
  std::size_t capacity_;
  std::vector<WeightVector> items_;
};

struct AdaptIteration {
  IterationStats stats;              // on the new objective
  std::optional<WeightVector> replayed;
};

struct AdaptOptions {
  int iterations = 0;
  // Called after every iteration (1-based count) with the learner state.
  std::function<void(int, const Learner&)> on_iteration;
};

std::vector<AdaptIteration> online_adapt(Learner& learner, const LinkSource& links,
                                         const WeightVector& new_w, RequirementPool& pool,
                                         const AdaptOptions& options);

// CSV: iteration,w_thr,w_lat,w_loss,mean_reward,surrogate,entropy_coef
void write_training_log(std::ostream& out, std::span<const IterationStats> log);

}  // namespace prefcc
