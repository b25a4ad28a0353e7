#include "prefcc/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "prefcc/csv.hpp"
#include "prefcc/error.hpp"
#include "parallel.hpp"

namespace prefcc {

AimdController::AimdController(double capacity, double initial_rate, AimdOptions options)
    : capacity_(capacity), rate_(initial_rate), options_(options) {
  if (!(capacity > 0.0)) throw InvalidArgument("AIMD capacity must be > 0");
  if (!(initial_rate > 0.0)) throw InvalidArgument("AIMD initial rate must be > 0");
  if (!(options.increase_fraction > 0.0)) throw InvalidArgument("AIMD increase must be > 0");
  if (!(options.decrease_factor > 0.0 && options.decrease_factor < 1.0)) {
    throw InvalidArgument("AIMD decrease factor must lie in (0, 1)");
  }
}

void AimdController::observe(const MiOutcome& outcome) {
  if (outcome.lost_pkts > 0.0) {
    rate_ = std::max(options_.floor, rate_ * options_.decrease_factor);
  } else {
    rate_ += options_.increase_fraction * capacity_;
  }
}

AgentController::AgentController(const ActorParams& actor, const WeightVector& w,
                                 double initial_rate, RateBounds bounds, double alpha)
    : actor_(actor),
      w_(w),
      tracker_(actor.spec.history_len),
      bounds_(bounds),
      alpha_(alpha),
      rate_(std::clamp(initial_rate, bounds.floor, bounds.ceiling)) {}

void AgentController::observe(const MiOutcome& outcome) {
  tracker_.push(outcome);
  if (!tracker_.full()) return;
  const PolicyOutput out = forward_actor(actor_, tracker_.window(w_));
  rate_ = apply_action(rate_, out.mu, alpha_, bounds_);
}

double jain_index(std::span<const double> rates) {
  if (rates.empty()) throw InvalidArgument("jain_index needs at least one rate");
  double sum = 0.0;
  double sq = 0.0;
  for (double x : rates) {
    if (!(std::isfinite(x) && x >= 0.0)) throw InvalidArgument("rates must be finite and >= 0");
    sum += x;
    sq += x * x;
  }
  if (sq == 0.0) throw InvalidArgument("jain_index is undefined for all-zero rates");
  return sum * sum / (static_cast<double>(rates.size()) * sq);
}

double friendliness_ratio(double scheme_delivery, double baseline_delivery) {
  if (!(baseline_delivery > 0.0)) throw InvalidArgument("baseline delivery rate must be > 0");
  return scheme_delivery / baseline_delivery;
}

SharedRunResult run_shared_link(const LinkConfig& config,
                                std::span<const std::unique_ptr<RateController>> controllers,
                                std::span<const double> start_times,
                                const SharedRunOptions& options) {
  validate(config);
  const std::size_t n = controllers.size();
  if (n == 0) throw InvalidArgument("shared run needs at least one controller");
  if (start_times.size() != n) throw InvalidArgument("one start time per controller required");
  if (!(options.duration > 0.0)) throw InvalidArgument("run duration must be > 0");

  SharedRunResult res;
  res.start_times.assign(start_times.begin(), start_times.end());
  res.duration = options.duration;
  const auto seconds = static_cast<std::size_t>(std::floor(options.duration));
  std::vector<std::vector<double>> delivered(seconds, std::vector<double>(n, 0.0));
  std::vector<double> elapsed(seconds, 0.0);

  LinkState link = link_reset(config);
  std::vector<double> rates(n, 0.0);
  while (link.time < options.duration) {
    const double start = link.time;
    const double tau = next_mi_duration(link);
    for (std::size_t i = 0; i < n; ++i) {
      rates[i] = start >= start_times[i] ? controllers[i]->rate() : 0.0;
    }
    const std::vector<MiOutcome> out = shared_link_step(link, rates, tau, options.sim_mode);
    const auto sec = static_cast<std::size_t>(start);
    if (sec < seconds) elapsed[sec] += tau;
    for (std::size_t i = 0; i < n; ++i) {
      if (start < start_times[i]) continue;
      controllers[i]->observe(out[i]);
      if (sec < seconds) delivered[sec][i] += out[i].delivered_pkts;
      res.trace.push_back({start, static_cast<int>(i), rates[i], out[i].delivered_pkts,
                           out[i].lost_pkts, out[i].queue_end, out[i].mean_latency});
    }
  }

  res.per_second_delivery.resize(seconds);
  for (std::size_t s = 0; s < seconds; ++s) {
    std::vector<double> active;
    res.per_second_delivery[s].assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double rate = elapsed[s] > 0.0 ? delivered[s][i] / elapsed[s] : 0.0;
      res.per_second_delivery[s][i] = rate;
      if (!options.active_only || start_times[i] <= static_cast<double>(s)) active.push_back(rate);
    }
    const bool any = std::any_of(active.begin(), active.end(), [](double x) { return x > 0.0; });
    res.jain.push_back({static_cast<int>(s), any ? jain_index(active) : 1.0,
                        static_cast<int>(active.size())});
  }
  return res;
}

SharedRunResult fairness_experiment(const LinkConfig& config,
                                    std::span<const std::unique_ptr<RateController>> controllers,
                                    double stagger, const SharedRunOptions& options) {
  if (controllers.size() < 2) throw InvalidArgument("fairness experiment needs >= 2 flows");
  if (!(stagger >= 0.0)) throw InvalidArgument("stagger must be >= 0");
  std::vector<double> starts(controllers.size());
  for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = stagger * static_cast<double>(i);
  return run_shared_link(config, controllers, starts, options);
}

double trailing_delivery(const SharedRunResult& run, int flow, int seconds) {
  const auto total = run.per_second_delivery.size();
  if (seconds <= 0 || static_cast<std::size_t>(seconds) > total) {
    throw InvalidArgument("trailing window must cover 1..run length seconds");
  }
  double sum = 0.0;
  for (std::size_t s = total - static_cast<std::size_t>(seconds); s < total; ++s) {
    sum += run.per_second_delivery[s].at(static_cast<std::size_t>(flow));
  }
  return sum / seconds;
}

double trailing_jain(const SharedRunResult& run, int seconds) {
  if (run.per_second_delivery.empty()) throw InvalidArgument("run has no complete seconds");
  std::vector<double> rates;
  for (std::size_t i = 0; i < run.per_second_delivery.front().size(); ++i) {
    rates.push_back(trailing_delivery(run, static_cast<int>(i), seconds));
  }
  return jain_index(rates);
}

FriendlinessResult friendliness_experiment(const LinkConfig& config,
                                           std::unique_ptr<RateController> scheme,
                                           std::unique_ptr<RateController> baseline,
                                           const SharedRunOptions& options) {
  if (!scheme || !baseline) throw InvalidArgument("friendliness needs two controllers");
  std::vector<std::unique_ptr<RateController>> flows;
  flows.push_back(std::move(scheme));
  flows.push_back(std::move(baseline));
  const std::vector<double> starts{0.0, 0.0};
  FriendlinessResult res;
  res.run = run_shared_link(config, flows, starts, options);
  const int half = std::max(1, static_cast<int>(res.run.per_second_delivery.size() / 2));
  res.scheme_delivery = trailing_delivery(res.run, 0, half);
  res.baseline_delivery = trailing_delivery(res.run, 1, half);
  res.ratio = friendliness_ratio(res.scheme_delivery, res.baseline_delivery);
  return res;
}

ScenarioMatrix evaluate_scenarios(const ActorParams& actor, std::vector<LinkConfig> links,
                                  std::vector<WeightVector> weights, const EvalOptions& options,
                                  const TrainConfig& config) {
  if (links.empty() || weights.empty()) throw InvalidArgument("scenario grid must be non-empty");
  for (const LinkConfig& l : links) validate(l);
  ScenarioMatrix m;
  m.links = std::move(links);
  m.weights = std::move(weights);
  m.rewards.assign(m.links.size() * m.weights.size(), 0.0);
  EvalOptions single = options;
  single.episodes = 1;
  single.mode = PolicyMode::kMean;
  detail::parallel_for(m.rewards.size(), config.threads, [&](std::size_t cell) {
    const LinkConfig& link = m.links[cell / m.weights.size()];
    const WeightVector& w = m.weights[cell % m.weights.size()];
    m.rewards[cell] = evaluate_policy(actor, fixed_link(link), w, single, config).mean_reward;
  });
  return m;
}

std::vector<CdfPoint> reward_cdf(std::span<const double> rewards) {
  if (rewards.empty()) throw InvalidArgument("reward_cdf needs at least one reward");
  std::vector<double> sorted(rewards.begin(), rewards.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CdfPoint> cdf;
  cdf.reserve(sorted.size());
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cdf.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  return cdf;
}

std::vector<CdfPoint> reward_cdf(const ActorParams& actor, std::vector<LinkConfig> links,
                                 std::vector<WeightVector> weights, const EvalOptions& options,
                                 const TrainConfig& config) {
  const ScenarioMatrix m =
      evaluate_scenarios(actor, std::move(links), std::move(weights), options, config);
  return reward_cdf(m.rewards);
}

double median(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

int convergence_iteration(std::span<const double> curve, int smoothing) {
  if (curve.empty()) throw InvalidArgument("convergence_iteration needs a non-empty curve");
  if (smoothing <= 0) throw InvalidArgument("smoothing window must be > 0");
  std::vector<double> smooth(curve.size());
  double running = 0.0;
  for (std::size_t t = 0; t < curve.size(); ++t) {
    running += curve[t];
    if (t >= static_cast<std::size_t>(smoothing)) running -= curve[t - smoothing];
    const auto count = std::min<std::size_t>(t + 1, static_cast<std::size_t>(smoothing));
    smooth[t] = running / static_cast<double>(count);
  }
  const double top = *std::max_element(smooth.begin(), smooth.end());
  const double gain = top - curve[0];
  // Rounding in the running sum is not a gain.
  if (!(gain > 1e-12 * std::max(1.0, std::abs(curve[0])))) return 0;
  const double target = curve[0] + 0.99 * gain;
  for (std::size_t t = 0; t < smooth.size(); ++t) {
    if (smooth[t] >= target) return static_cast<int>(t);
  }
  return static_cast<int>(curve.size()) - 1;
}

void write_reward_cdf_csv(std::ostream& out, std::span<const CdfPoint> cdf) {
  CsvWriter w(out, {"reward", "cumulative_fraction"});
  for (const CdfPoint& p : cdf) w.row(p.reward, p.fraction);
}

void write_jain_csv(std::ostream& out, std::span<const JainSample> series) {
  CsvWriter w(out, {"second", "jain", "active_flows"});
  for (const JainSample& s : series) w.row(s.second, s.index, s.active_flows);
}

}  // namespace prefcc
