#include "prefcc/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "prefcc/csv.hpp"
#include "prefcc/error.hpp"

namespace prefcc {

WeightVector WeightVector::create(double thr, double lat, double loss) {
  const std::array<double, 3> w{thr, lat, loss};
  for (double v : w) {
    if (!(std::isfinite(v) && v > 0.0 && v < 1.0)) {
      throw InvalidArgument("weight vector " + WeightVector(w).to_string() +
                            ": every weight must lie in (0, 1)");
    }
  }
  if (std::abs(thr + lat + loss - 1.0) > kWeightSumTolerance) {
    throw InvalidArgument("weight vector " + WeightVector(w).to_string() + " must sum to 1");
  }
  return WeightVector(w);
}

bool WeightVector::approx_equal(const WeightVector& other, double tol) const {
  for (std::size_t i = 0; i < 3; ++i) {
    if (std::abs(w_[i] - other.w_[i]) > tol) return false;
  }
  return true;
}

std::string WeightVector::to_string() const {
  return format_double(w_[0]) + "," + format_double(w_[1]) + "," + format_double(w_[2]);
}

MonitorStats monitor_stats(const MiOutcome& curr, double prev_mean_latency, double min_latency) {
  if (!(min_latency > 0.0)) throw InvalidArgument("minimum latency must be > 0");
  MonitorStats s;
  if (curr.delivered_pkts > 0.0) {
    s.sending_ratio = std::min(curr.sent_pkts / curr.delivered_pkts, kSendingRatioCap);
  } else {
    s.sending_ratio = curr.sent_pkts > 0.0 ? kSendingRatioCap : 1.0;
  }
  s.latency_ratio = curr.mean_latency / std::min(min_latency, curr.mean_latency);
  s.latency_gradient = (curr.mean_latency - prev_mean_latency) / curr.mi_duration;
  return s;
}

std::vector<double> StateWindow::flatten() const {
  std::vector<double> out;
  out.reserve(stats.size() * 3);
  for (const MonitorStats& s : stats) {
    out.push_back(s.sending_ratio);
    out.push_back(s.latency_ratio);
    out.push_back(s.latency_gradient);
  }
  return out;
}

StatsTracker::StatsTracker(int history_len) : history_len_(history_len) {
  if (history_len <= 0) throw InvalidArgument("history length must be > 0");
}

const MonitorStats& StatsTracker::push(const MiOutcome& outcome) {
  min_latency_ = min_latency_ ? std::min(*min_latency_, outcome.mean_latency) : outcome.mean_latency;
  const double prev = prev_latency_.value_or(outcome.mean_latency);
  window_.push_back(monitor_stats(outcome, prev, *min_latency_));
  prev_latency_ = outcome.mean_latency;
  if (static_cast<int>(window_.size()) > history_len_) window_.pop_front();
  return window_.back();
}

StateWindow StatsTracker::window(const WeightVector& w) const {
  StateWindow sw;
  sw.stats.assign(window_.begin(), window_.end());
  sw.preference = w;
  return sw;
}

void LinkEstimate::observe(const MiOutcome& outcome) {
  max_throughput = std::max(max_throughput, outcome.throughput);
  if (min_latency == 0.0 || outcome.mean_latency < min_latency) min_latency = outcome.mean_latency;
}

PerfMeasures perf_measures(const MiOutcome& outcome, const LinkConfig& config, PerfMode mode,
                           const LinkEstimate& estimate) {
  double capacity = config.capacity;
  double base_latency = config.base_rtt();
  if (mode == PerfMode::kOnline) {
    capacity = estimate.max_throughput;
    base_latency = estimate.min_latency;
  }
  PerfMeasures m;
  m.thr = capacity > 0.0 ? std::clamp(outcome.throughput / capacity, 0.0, 1.0) : 0.0;
  m.lat = outcome.mean_latency > 0.0 && base_latency > 0.0
              ? std::clamp(base_latency / outcome.mean_latency, 0.0, 1.0)
              : 1.0;
  m.loss = outcome.sent_pkts > 0.0
               ? std::clamp(1.0 - outcome.lost_pkts / outcome.sent_pkts, 0.0, 1.0)
               : 1.0;
  return m;
}

double reward(const WeightVector& w, const PerfMeasures& m) {
  return w.thr() * m.thr + w.lat() * m.lat + w.loss() * m.loss;
}

Env::Env(const LinkConfig& config, const WeightVector& w, EnvOptions options)
    : options_(options), w_(w), link_(link_reset(config)), tracker_(options.history_len) {}

RateBounds Env::rate_bounds() const {
  return {options_.rate_floor, options_.rate_ceiling_factor * link_.config.capacity};
}

MiOutcome Env::run_interval(double rate) {
  const double tau = next_mi_duration(link_);
  MiOutcome out = link_step_mi(link_, rate, tau, options_.sim_mode);
  tracker_.push(out);
  estimate_.observe(out);
  return out;
}

const StateWindow& Env::reset(double warmup_rate) {
  if (!(std::isfinite(warmup_rate) && warmup_rate > 0.0)) {
    throw InvalidArgument("warm-up rate must be > 0");
  }
  link_ = link_reset(link_.config);
  tracker_ = StatsTracker(options_.history_len);
  estimate_ = {};
  const RateBounds b = rate_bounds();
  send_rate_ = std::clamp(warmup_rate, b.floor, b.ceiling);
  for (int i = 0; i < options_.history_len; ++i) run_interval(send_rate_);
  window_ = tracker_.window(w_);
  ready_ = true;
  return window_;
}

StepResult Env::step(double action) {
  if (!ready_) throw InvalidArgument("Env::step called before reset");
  send_rate_ = apply_action(send_rate_, action, options_.alpha, rate_bounds());
  StepResult r;
  r.outcome = run_interval(send_rate_);
  r.measures = perf_measures(r.outcome, link_.config, options_.perf_mode, estimate_);
  r.reward = reward(w_, r.measures);
  r.send_rate = send_rate_;
  window_ = tracker_.window(w_);
  r.window = window_;
  return r;
}

}  // namespace prefcc
