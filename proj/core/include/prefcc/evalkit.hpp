#pragma once

// Evaluation helpers: a loss-based AIMD reference sender, fairness and
// friendliness metrics over shared-link runs, reward CDFs over scenario
// grids, and the convergence-point metric for learning curves.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "prefcc/agent.hpp"
#include "prefcc/env.hpp"
#include "prefcc/netsim.hpp"
#include "prefcc/trainer.hpp"

namespace prefcc {

// A sender that picks its next rate from the outcome of its last interval.
class RateController {
 public:
  virtual ~RateController() = default;
  virtual double rate() const = 0;
  virtual void observe(const MiOutcome& outcome) = 0;
};

struct AimdOptions {
  double increase_fraction = 0.02;  // additive step per interval, fraction of capacity
  double decrease_factor = 0.5;
  double floor = 0.1;               // packets/second
};

class AimdController final : public RateController {
 public:
  AimdController(double capacity, double initial_rate, AimdOptions options = {});
  double rate() const override { return rate_; }
  void observe(const MiOutcome& outcome) override;

 private:
  double capacity_;
  double rate_;
  AimdOptions options_;
};

// Acts with the policy mean. Holds its initial rate until the statistics
// history is full.
class AgentController final : public RateController {
 public:
  AgentController(const ActorParams& actor, const WeightVector& w, double initial_rate,
                  RateBounds bounds, double alpha = kDefaultActionScale);
  double rate() const override { return rate_; }
  void observe(const MiOutcome& outcome) override;

 private:
  ActorParams actor_;
  WeightVector w_;
  StatsTracker tracker_;
  RateBounds bounds_;
  double alpha_;
  double rate_;
};

// (sum x)^2 / (n sum x^2). Throws InvalidArgument on empty, negative or
// all-zero input.
double jain_index(std::span<const double> rates);

// Throws InvalidArgument unless baseline_delivery > 0.
double friendliness_ratio(double scheme_delivery, double baseline_delivery);

struct JainSample {
  int second = 0;
  double index = 1.0;
  int active_flows = 0;
};

struct SharedRunResult {
  std::vector<TraceRow> trace;
  std::vector<double> start_times;
  std::vector<JainSample> jain;            // one per whole second
  std::vector<std::vector<double>> per_second_delivery;  // [second][flow], pkts/s
  double duration = 0.0;
};

struct SharedRunOptions {
  double duration = 60.0;  // seconds
  SimMode sim_mode = SimMode::kExpectation;
  // Jain over flows that were active during the second; otherwise over all.
  bool active_only = true;
};

// Steps every started controller on one shared FIFO. Flow i starts sending at
// start_times[i].
SharedRunResult run_shared_link(const LinkConfig& config,
                                std::span<const std::unique_ptr<RateController>> controllers,
                                std::span<const double> start_times,
                                const SharedRunOptions& options);

// n flows started `stagger` seconds apart. Throws InvalidArgument for n < 2.
SharedRunResult fairness_experiment(const LinkConfig& config,
                                    std::span<const std::unique_ptr<RateController>> controllers,
                                    double stagger, const SharedRunOptions& options);

// Jain index over each flow's mean delivery rate in the last `seconds`
// seconds of the run.
double trailing_jain(const SharedRunResult& run, int seconds);

// Mean delivery rate of `flow` over the last `seconds` seconds.
double trailing_delivery(const SharedRunResult& run, int flow, int seconds);

struct FriendlinessResult {
  double ratio = 0.0;
  double scheme_delivery = 0.0;
  double baseline_delivery = 0.0;
  SharedRunResult run;
};

// Scheme and baseline start together; delivery rates are averaged over the
// second half of the run.
FriendlinessResult friendliness_experiment(const LinkConfig& config,
                                           std::unique_ptr<RateController> scheme,
                                           std::unique_ptr<RateController> baseline,
                                           const SharedRunOptions& options);

struct ScenarioMatrix {
  std::vector<LinkConfig> links;
  std::vector<WeightVector> weights;
  std::vector<double> rewards;  // row-major, links x weights

  double at(std::size_t link, std::size_t weight) const {
    return rewards[link * weights.size() + weight];
  }
};

// One mu-mode episode per cell with a fixed seed. Cells run in parallel over
// config.threads workers and are stored in grid order.
ScenarioMatrix evaluate_scenarios(const ActorParams& actor, std::vector<LinkConfig> links,
                                  std::vector<WeightVector> weights, const EvalOptions& options,
                                  const TrainConfig& config);

struct CdfPoint {
  double reward = 0.0;
  double fraction = 0.0;
};

// Empirical CDF of the rewards, sorted ascending. Throws on empty input.
std::vector<CdfPoint> reward_cdf(std::span<const double> rewards);
std::vector<CdfPoint> reward_cdf(const ActorParams& actor, std::vector<LinkConfig> links,
                                 std::vector<WeightVector> weights, const EvalOptions& options,
                                 const TrainConfig& config);

double median(std::span<const double> values);

// Smallest t whose trailing-mean smoothed value reaches
// curve[0] + 0.99 (max smoothed - curve[0]); 0 when there is no gain.
int convergence_iteration(std::span<const double> curve, int smoothing = 10);

// CSV: reward,cumulative_fraction
void write_reward_cdf_csv(std::ostream& out, std::span<const CdfPoint> cdf);
// CSV: second,jain,active_flows
void write_jain_csv(std::ostream& out, std::span<const JainSample> series);

}  // namespace prefcc
