#pragma once

// MDP wrapper around the link simulator: history window of monitor
// statistics, normalized performance measures and the preference-weighted
// reward.

#include <array>
#include <compare>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "prefcc/netsim.hpp"
#include "prefcc/rate_control.hpp"

namespace prefcc {

inline constexpr int kDefaultHistoryLen = 10;
inline constexpr double kSendingRatioCap = 10.0;
inline constexpr double kWeightSumTolerance = 1e-9;

// Relative importance of (throughput, latency, loss). Each weight lies in
// (0, 1) and the three sum to one.
class WeightVector {
 public:
  // Uniform preference.
  WeightVector() : w_{1.0 / 3, 1.0 / 3, 1.0 - 2.0 / 3} {}

  // Throws InvalidArgument when the invariants do not hold.
  static WeightVector create(double thr, double lat, double loss);

  double thr() const { return w_[0]; }
  double lat() const { return w_[1]; }
  double loss() const { return w_[2]; }
  const std::array<double, 3>& values() const { return w_; }

  // Component-wise match within `tol`.
  bool approx_equal(const WeightVector& other, double tol = 1e-9) const;

  std::string to_string() const;

  auto operator<=>(const WeightVector&) const = default;

 private:
  explicit WeightVector(std::array<double, 3> w) : w_(w) {}
  std::array<double, 3> w_;
};

struct MonitorStats {
  double sending_ratio = 1.0;     // sent / delivered
  double latency_ratio = 1.0;     // mean latency / minimum observed mean latency
  double latency_gradient = 0.0;  // d(latency)/dt, seconds per second
};

// `prev_mean_latency` is the previous interval's mean latency (pass the
// current one on the first interval). The latency ratio uses
// min(min_latency, current) so it never drops below one.
MonitorStats monitor_stats(const MiOutcome& curr, double prev_mean_latency, double min_latency);

struct StateWindow {
  std::vector<MonitorStats> stats;  // oldest -> newest
  WeightVector preference;

  // (l, p, q) triples, oldest first.
  std::vector<double> flatten() const;
};

// Per-sender view of the statistics history. Tracks its own latency minimum
// so several senders on one link each keep a private history.
class StatsTracker {
 public:
  explicit StatsTracker(int history_len = kDefaultHistoryLen);

  const MonitorStats& push(const MiOutcome& outcome);
  bool full() const { return static_cast<int>(window_.size()) == history_len_; }
  int history_len() const { return history_len_; }
  StateWindow window(const WeightVector& w) const;
  std::optional<double> min_latency() const { return min_latency_; }

 private:
  int history_len_;
  std::deque<MonitorStats> window_;
  std::optional<double> min_latency_;
  std::optional<double> prev_latency_;
};

struct PerfMeasures {
  double thr = 0.0;
  double lat = 0.0;
  double loss = 0.0;
};

enum class PerfMode {
  kOracle,  // true capacity and base RTT
  kOnline,  // running max throughput / min latency as estimates
};

// Running estimates used by online measures.
struct LinkEstimate {
  double max_throughput = 0.0;
  double min_latency = 0.0;  // 0 = nothing observed yet

  void observe(const MiOutcome& outcome);
};

// In online mode `estimate` must already include `outcome`.
PerfMeasures perf_measures(const MiOutcome& outcome, const LinkConfig& config, PerfMode mode,
                           const LinkEstimate& estimate = {});

double reward(const WeightVector& w, const PerfMeasures& m);

struct EnvOptions {
  int history_len = kDefaultHistoryLen;
  double alpha = kDefaultActionScale;
  PerfMode perf_mode = PerfMode::kOracle;
  SimMode sim_mode = SimMode::kStochastic;
  double rate_floor = 0.1;
  double rate_ceiling_factor = 10.0;  // multiples of link capacity
};

struct StepResult {
  StateWindow window;
  double reward = 0.0;
  MiOutcome outcome;
  PerfMeasures measures;
  double send_rate = 0.0;
};

class Env {
 public:
  Env(const LinkConfig& config, const WeightVector& w, EnvOptions options = {});

  // Runs `history_len` warm-up intervals at `warmup_rate` and returns the
  // first full window.
  const StateWindow& reset(double warmup_rate);

  // Applies the rate update for `action`, runs one interval, and scores it.
  StepResult step(double action);

  const StateWindow& window() const { return window_; }
  const WeightVector& preference() const { return w_; }
  double send_rate() const { return send_rate_; }
  const LinkState& link() const { return link_; }
  const LinkConfig& config() const { return link_.config; }
  const EnvOptions& options() const { return options_; }
  const LinkEstimate& estimate() const { return estimate_; }
  RateBounds rate_bounds() const;

 private:
  MiOutcome run_interval(double rate);

  EnvOptions options_;
  WeightVector w_;
  LinkState link_;
  StatsTracker tracker_;
  LinkEstimate estimate_;
  StateWindow window_;
  double send_rate_ = 0.0;
  bool ready_ = false;
};

}  // namespace prefcc
