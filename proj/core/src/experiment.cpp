#include "prefcc/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace prefcc {

using detail::json;
using detail::ObjectReader;

namespace {

void check_range(const Range& r, const char* name, double min, double max, bool open_min) {
  if (!(std::isfinite(r.lo) && std::isfinite(r.hi))) {
    throw InvalidConfig(std::string(name) + ": range must be finite");
  }
  if (r.lo > r.hi) throw InvalidConfig(std::string(name) + ": range is empty (lo > hi)");
  if (open_min ? !(r.lo > min) : !(r.lo >= min)) {
    throw InvalidConfig(std::string(name) + ": lower bound out of range");
  }
  if (!(r.hi <= max)) throw InvalidConfig(std::string(name) + ": upper bound out of range");
}

double uniform(const Range& r, std::mt19937_64& rng) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

Range range_from_json(const json& j, const std::string& path) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return {v, v};
  }
  if (j.is_array() && j.size() == 2) {
    return {ObjectReader::convert<double>(j[0], path + "[0]"),
            ObjectReader::convert<double>(j[1], path + "[1]")};
  }
  throw ParseError(path + ": expected a number or [lo, hi]");
}

LinkRanges link_ranges_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  LinkRanges l;
  l.bandwidth_mbps = range_from_json(r.at("bandwidth_mbps"), r.key_path("bandwidth_mbps"));
  l.one_way_delay_ms = range_from_json(r.at("one_way_delay_ms"), r.key_path("one_way_delay_ms"));
  l.queue_pkts = range_from_json(r.at("queue_pkts"), r.key_path("queue_pkts"));
  l.loss_rate = r.has("loss_rate") ? range_from_json(r.at("loss_rate"), r.key_path("loss_rate"))
                                   : Range{0.0, 0.0};
  r.finish();
  l.validate();
  return l;
}

LinkConfig link_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const double bw = r.get<double>("bandwidth_mbps");
  const double owd = r.get<double>("one_way_delay_ms");
  const double queue = r.get<double>("queue_pkts");
  const double loss = r.get_or("loss_rate", 0.0);
  r.finish();
  LinkConfig c = link_from_units(bw, owd, queue, loss);
  validate(c);
  return c;
}

std::vector<WeightVector> weight_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path + ": expected an array of weight vectors");
  std::vector<WeightVector> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(detail::weights_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

OfflineConfig offline_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  OfflineConfig c;
  if (r.has("step")) {
    const json& step = r.at("step");
    c.lattice_denominator = step.is_string() ? step_denominator(step.get<std::string>())
                                             : step_denominator(std::to_string(step.get<double>()));
  }
  if (r.has("bootstraps")) c.bootstraps = weight_list(r.at("bootstraps"), r.key_path("bootstraps"));
  c.phase1_min_iters = r.get_or("phase1_min_iters", c.phase1_min_iters);
  c.phase1_max_iters = r.get_or("phase1_max_iters", c.phase1_max_iters);
  c.plateau_window = r.get_or("plateau_window", c.plateau_window);
  c.plateau_tolerance = r.get_or("plateau_tolerance", c.plateau_tolerance);
  c.iters_per_objective = r.get_or("iters_per_objective", c.iters_per_objective);
  c.min_passes = r.get_or("min_passes", c.min_passes);
  c.max_passes = r.get_or("max_passes", c.max_passes);
  r.finish();
  c.validate();
  return c;
}

FairnessConfig fairness_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  FairnessConfig f;
  f.flows = r.get_or("flows", f.flows);
  f.bandwidth_mbps = r.get_or("bandwidth_mbps", f.bandwidth_mbps);
  f.one_way_delay_ms = r.get_or("one_way_delay_ms", f.one_way_delay_ms);
  f.queue_pkts = r.get_or("queue_pkts", f.queue_pkts);
  f.loss_rate = r.get_or("loss_rate", f.loss_rate);
  f.stagger_s = r.get_or("stagger_s", f.stagger_s);
  f.duration_s = r.get_or("duration_s", f.duration_s);
  f.trailing_s = r.get_or("trailing_s", f.trailing_s);
  if (r.has("weights")) f.weights = detail::weights_from_json(r.at("weights"), r.key_path("weights"));
  r.finish();
  if (f.flows < 2) throw InvalidConfig(path + ".flows: need at least 2 flows");
  if (!(f.stagger_s >= 0.0)) throw InvalidConfig(path + ".stagger_s: must be >= 0");
  if (!(f.duration_s >= 1.0)) throw InvalidConfig(path + ".duration_s: must be >= 1");
  if (f.trailing_s < 1 || f.trailing_s > static_cast<int>(f.duration_s)) {
    throw InvalidConfig(path + ".trailing_s: must lie in [1, duration_s]");
  }
  validate(link_from_units(f.bandwidth_mbps, f.one_way_delay_ms, f.queue_pkts, f.loss_rate));
  return f;
}

EvalConfig eval_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  EvalConfig e;
  if (r.has("links")) {
    const json& links = r.at("links");
    if (!links.is_array()) throw ParseError(r.key_path("links") + ": expected an array");
    for (std::size_t i = 0; i < links.size(); ++i) {
      e.links.push_back(link_from_json(links[i], r.key_path("links") + "[" + std::to_string(i) + "]"));
    }
  }
  if (r.has("weights")) e.weights = weight_list(r.at("weights"), r.key_path("weights"));
  e.options.episode_len = r.get_or("episode_len", e.options.episode_len);
  e.options.start_rate_fraction = r.get_or("start_rate_fraction", e.options.start_rate_fraction);
  e.options.seed = r.get_or("seed", e.options.seed);
  if (r.has("fairness")) e.fairness = fairness_from_json(r.at("fairness"), r.key_path("fairness"));
  e.friendliness = r.get_or("friendliness", e.friendliness);
  r.finish();
  if (e.options.episode_len <= 0) throw InvalidConfig(path + ".episode_len: must be > 0");
  if (!(e.options.start_rate_fraction > 0.0)) {
    throw InvalidConfig(path + ".start_rate_fraction: must be > 0");
  }
  return e;
}

}  // namespace

void LinkRanges::validate() const {
  check_range(bandwidth_mbps, "bandwidth_mbps", 0.0, 1e6, true);
  check_range(one_way_delay_ms, "one_way_delay_ms", 0.0, 1e5, true);
  check_range(queue_pkts, "queue_pkts", 0.0, 1e9, false);
  check_range(loss_rate, "loss_rate", 0.0, 1.0, false);
  if (!(loss_rate.hi < 1.0)) throw InvalidConfig("loss_rate: upper bound must be < 1");
}

LinkConfig link_from_units(double bandwidth_mbps, double one_way_delay_ms, double queue_pkts,
                           double loss_rate, std::uint64_t seed) {
  return {mbps_to_pps(bandwidth_mbps), one_way_delay_ms / 1000.0, queue_pkts, loss_rate, seed};
}

LinkSource range_link_source(const LinkRanges& ranges) {
  ranges.validate();
  return [ranges](std::mt19937_64& rng) {
    const double bw = uniform(ranges.bandwidth_mbps, rng);
    const double owd = uniform(ranges.one_way_delay_ms, rng);
    const double queue = uniform(ranges.queue_pkts, rng);
    const double loss = uniform(ranges.loss_rate, rng);
    return link_from_units(bw, owd, queue, loss);
  };
}

WeightVector parse_weights(std::string_view text) {
  double v[3] = {};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find(',', pos) : text.size();
    if (end == std::string_view::npos) {
      throw InvalidArgument("weights must be three comma-separated numbers: '" +
                            std::string(text) + "'");
    }
    const std::string_view field = text.substr(pos, end - pos);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v[i]);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
      throw InvalidArgument("cannot parse weight '" + std::string(field) + "'");
    }
    pos = end + 1;
  }
  return WeightVector::create(v[0], v[1], v[2]);
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  ObjectReader r(doc, "");
  ExperimentConfig c;
  c.seed = r.get<std::uint64_t>("seed");
  c.link = link_ranges_from_json(r.at("link"), "link");
  TrainConfig base;
  base.seed = c.seed;
  c.train = r.has("train") ? detail::train_config_from_json(r.at("train"), "train", base) : base;
  c.train.seed = c.seed;
  if (r.has("offline")) c.offline = offline_from_json(r.at("offline"), "offline");
  if (r.has("eval")) c.eval = eval_from_json(r.at("eval"), "eval");
  c.output_dir = r.get_or<std::string>("output_dir", "");
  r.finish();
  c.train.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str());
}

}  // namespace prefcc
