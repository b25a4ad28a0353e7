#pragma once

// Fluid model of a single FIFO bottleneck link, stepped one monitor interval
// (MI) at a time. Rates are in packets/second, times in seconds.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace prefcc {

inline constexpr double kPacketBytes = 1500.0;

// Mbps -> packets/second with a fixed 1500-byte packet.
constexpr double mbps_to_pps(double mbps) { return mbps * 1e6 / (8.0 * kPacketBytes); }
constexpr double pps_to_mbps(double pps) { return pps * 8.0 * kPacketBytes / 1e6; }

struct LinkConfig {
  double capacity = 0.0;        // packets/second
  double base_owd = 0.0;        // one-way propagation delay, seconds
  double queue_capacity = 0.0;  // packets
  double random_loss = 0.0;     // per-packet loss probability in [0, 1)
  std::uint64_t seed = 0;

  double base_rtt() const { return 2.0 * base_owd; }
};

// Throws InvalidConfig when the config violates its invariants.
void validate(const LinkConfig& config);

enum class SimMode {
  kStochastic,   // random loss sampled binomially
  kExpectation,  // random loss applied as its exact expected fraction
};

struct LinkState {
  LinkConfig config;
  double time = 0.0;
  double queue_pkts = 0.0;
  std::mt19937_64 rng;
  std::optional<double> min_observed_latency;
  std::optional<double> prev_mean_latency;
};

// Outcome of one MI. Packets that enter the queue during the interval are
// not yet delivered or lost, so per-interval conservation reads
//   sent = delivered + lost + (queue_end - queue_start)
// and `queue_delta` carries the last term.
struct MiOutcome {
  double sent_pkts = 0.0;
  double delivered_pkts = 0.0;
  double lost_pkts = 0.0;
  double overflow_lost_pkts = 0.0;
  double random_lost_pkts = 0.0;
  double queue_delta = 0.0;
  double queue_end = 0.0;
  double mean_latency = 0.0;  // RTT, seconds
  double mi_duration = 0.0;
  double throughput = 0.0;    // delivered / mi_duration
  double send_rate = 0.0;
};

LinkState link_reset(const LinkConfig& config);

// MI length convention: the RTT estimate at interval start, floored at the
// base RTT.
double next_mi_duration(const LinkState& state);

MiOutcome link_step_mi(LinkState& state, double send_rate, double tau, SimMode mode);

// Several flows sharing the same FIFO. Delivery and loss are apportioned to
// flows in proportion to their offered rates; all flows see one latency.
std::vector<MiOutcome> shared_link_step(LinkState& state, std::span<const double> send_rates,
                                        double tau, SimMode mode);

struct TraceRow {
  double time = 0.0;
  int flow_id = 0;
  double send_rate = 0.0;
  double delivered = 0.0;
  double lost = 0.0;
  double queue_pkts = 0.0;
  double mean_latency_s = 0.0;
};

// CSV columns: time,flow_id,send_rate,delivered,lost,queue_pkts,mean_latency_s
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

}  // namespace prefcc
