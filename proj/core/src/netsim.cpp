#include "prefcc/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "prefcc/csv.hpp"
#include "prefcc/error.hpp"

namespace prefcc {

void validate(const LinkConfig& config) {
  if (!(std::isfinite(config.capacity) && config.capacity > 0.0)) {
    throw InvalidConfig("link capacity must be > 0, got " + std::to_string(config.capacity));
  }
  if (!(std::isfinite(config.base_owd) && config.base_owd > 0.0)) {
    throw InvalidConfig("base one-way delay must be > 0, got " + std::to_string(config.base_owd));
  }
  if (!(std::isfinite(config.queue_capacity) && config.queue_capacity >= 0.0)) {
    throw InvalidConfig("queue capacity must be >= 0, got " +
                        std::to_string(config.queue_capacity));
  }
  if (!(config.random_loss >= 0.0 && config.random_loss < 1.0)) {
    throw InvalidConfig("random loss must lie in [0, 1), got " +
                        std::to_string(config.random_loss));
  }
}

LinkState link_reset(const LinkConfig& config) {
  validate(config);
  LinkState state;
  state.config = config;
  state.rng.seed(config.seed);
  return state;
}

double next_mi_duration(const LinkState& state) {
  const double rtt = state.config.base_rtt() + state.queue_pkts / state.config.capacity;
  return std::max(rtt, state.config.base_rtt());
}

namespace {

void check_step_args(double send_rate, double tau) {
  if (!(std::isfinite(send_rate) && send_rate >= 0.0)) {
    throw InvalidArgument("send rate must be finite and >= 0");
  }
  if (!(std::isfinite(tau) && tau > 0.0)) {
    throw InvalidArgument("monitor interval must be > 0");
  }
}

double sample_random_loss(LinkState& state, double delivered, SimMode mode) {
  const double p = state.config.random_loss;
  if (p == 0.0 || delivered <= 0.0) return 0.0;
  if (mode == SimMode::kExpectation) return p * delivered;
  const auto trials = static_cast<std::int64_t>(std::llround(delivered));
  if (trials <= 0) return 0.0;
  std::binomial_distribution<std::int64_t> binom(trials, p);
  return std::min(static_cast<double>(binom(state.rng)), delivered);
}

// Advances the shared queue by one interval for an aggregate offered rate.
MiOutcome step_aggregate(LinkState& state, double send_rate, double tau, SimMode mode) {
  const LinkConfig& cfg = state.config;
  const double queue_start = state.queue_pkts;
  const double sent = send_rate * tau;
  const double drain = cfg.capacity * tau;

  const double backlog = queue_start + sent - drain;
  const double overflow = std::max(0.0, backlog - cfg.queue_capacity);
  const double queue_end = std::clamp(backlog, 0.0, cfg.queue_capacity);
  // Bytes that left the queue this interval: at most `drain`.
  const double departed = queue_start + sent - overflow - queue_end;
  const double random_lost = sample_random_loss(state, departed, mode);

  MiOutcome out;
  out.sent_pkts = sent;
  out.delivered_pkts = departed - random_lost;
  out.overflow_lost_pkts = overflow;
  out.random_lost_pkts = random_lost;
  out.lost_pkts = overflow + random_lost;
  out.queue_delta = queue_end - queue_start;
  out.queue_end = queue_end;
  out.mean_latency = cfg.base_rtt() + 0.5 * (queue_start + queue_end) / cfg.capacity;
  out.mi_duration = tau;
  out.throughput = out.delivered_pkts / tau;
  out.send_rate = send_rate;

  state.queue_pkts = queue_end;
  state.time += tau;
  state.min_observed_latency = state.min_observed_latency
                                   ? std::min(*state.min_observed_latency, out.mean_latency)
                                   : out.mean_latency;
  state.prev_mean_latency = out.mean_latency;
  return out;
}

}  // namespace

MiOutcome link_step_mi(LinkState& state, double send_rate, double tau, SimMode mode) {
  check_step_args(send_rate, tau);
  return step_aggregate(state, send_rate, tau, mode);
}

std::vector<MiOutcome> shared_link_step(LinkState& state, std::span<const double> send_rates,
                                        double tau, SimMode mode) {
  if (send_rates.empty()) throw InvalidArgument("shared_link_step needs at least one flow");
  double total_rate = 0.0;
  for (double r : send_rates) {
    check_step_args(r, tau);
    total_rate += r;
  }
  const MiOutcome agg = step_aggregate(state, total_rate, tau, mode);

  std::vector<MiOutcome> flows;
  flows.reserve(send_rates.size());
  for (double r : send_rates) {
    const double share = total_rate > 0.0 ? r / total_rate : 0.0;
    MiOutcome f;
    f.sent_pkts = r * tau;
    f.delivered_pkts = share * agg.delivered_pkts;
    f.overflow_lost_pkts = share * agg.overflow_lost_pkts;
    f.random_lost_pkts = share * agg.random_lost_pkts;
    f.lost_pkts = share * agg.lost_pkts;
    f.queue_delta = share * agg.queue_delta;
    f.queue_end = agg.queue_end;
    f.mean_latency = agg.mean_latency;
    f.mi_duration = tau;
    f.throughput = f.delivered_pkts / tau;
    f.send_rate = r;
    flows.push_back(f);
  }
  return flows;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  CsvWriter csv(out, {"time", "flow_id", "send_rate", "delivered", "lost", "queue_pkts",
                      "mean_latency_s"});
  for (const TraceRow& r : rows) {
    csv.row(r.time, r.flow_id, r.send_rate, r.delivered, r.lost, r.queue_pkts, r.mean_latency_s);
  }
}

}  // namespace prefcc
