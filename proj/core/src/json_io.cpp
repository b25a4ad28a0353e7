#include "json_io.hpp"

namespace prefcc::detail {

ObjectReader::ObjectReader(const json& j, std::string path) : obj_(j), path_(std::move(path)) {
  if (!j.is_object()) throw ParseError((path_.empty() ? "document" : path_) + ": expected an object");
}

std::string ObjectReader::key_path(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

const json& ObjectReader::at(const std::string& key) {
  seen_.insert(key);
  const auto it = obj_.find(key);
  if (it == obj_.end()) throw InvalidConfig("missing required key '" + key_path(key) + "'");
  return *it;
}

void ObjectReader::finish() const {
  for (const auto& item : obj_.items()) {
    if (!seen_.contains(item.key())) {
      throw InvalidConfig("unknown key '" + key_path(item.key()) + "'");
    }
  }
}

json to_json(const WeightVector& w) { return json::array({w.thr(), w.lat(), w.loss()}); }

WeightVector weights_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ParseError(path + ": expected [w_thr, w_lat, w_loss]");
  try {
    return WeightVector::create(ObjectReader::convert<double>(j[0], path + "[0]"),
                                ObjectReader::convert<double>(j[1], path + "[1]"),
                                ObjectReader::convert<double>(j[2], path + "[2]"));
  } catch (const InvalidArgument& e) {
    throw InvalidConfig(path + ": " + e.what());
  }
}

PerfMode perf_mode_from_string(const std::string& s) {
  if (s == "oracle") return PerfMode::kOracle;
  if (s == "online") return PerfMode::kOnline;
  throw InvalidConfig("perf mode must be 'oracle' or 'online', got '" + s + "'");
}

SimMode sim_mode_from_string(const std::string& s) {
  if (s == "stochastic") return SimMode::kStochastic;
  if (s == "expectation") return SimMode::kExpectation;
  throw InvalidConfig("sim mode must be 'stochastic' or 'expectation', got '" + s + "'");
}

std::string to_string(PerfMode m) { return m == PerfMode::kOracle ? "oracle" : "online"; }
std::string to_string(SimMode m) { return m == SimMode::kStochastic ? "stochastic" : "expectation"; }

json to_json(const TrainConfig& c) {
  return {
      {"gamma", c.gamma},
      {"lr", c.lr},
      {"alpha", c.alpha},
      {"history_len", c.history_len},
      {"clip_eps", c.clip_eps},
      {"entropy_start", c.entropy_start},
      {"entropy_end", c.entropy_end},
      {"entropy_decay_iters", c.entropy_decay_iters},
      {"episode_len", c.episode_len},
      {"episodes_per_iter", c.episodes_per_iter},
      {"epochs", c.epochs},
      {"minibatches", c.minibatches},
      {"max_grad_norm", c.max_grad_norm},
      {"normalize_advantages", c.normalize_advantages},
      {"init_log_std", c.init_log_std},
      {"log_std_min", c.log_std_min},
      {"log_std_max", c.log_std_max},
      {"start_rate_min", c.start_rate_min},
      {"start_rate_max", c.start_rate_max},
      {"perf_mode", to_string(c.perf_mode)},
      {"sim_mode", to_string(c.sim_mode)},
      {"seed", c.seed},
      {"threads", c.threads},
  };
}

TrainConfig train_config_from_json(const json& j, const std::string& path, TrainConfig c) {
  ObjectReader r(j, path);
  c.gamma = r.get_or("gamma", c.gamma);
  c.lr = r.get_or("lr", c.lr);
  c.alpha = r.get_or("alpha", c.alpha);
  c.history_len = r.get_or("history_len", c.history_len);
  c.clip_eps = r.get_or("clip_eps", c.clip_eps);
  c.entropy_start = r.get_or("entropy_start", c.entropy_start);
  c.entropy_end = r.get_or("entropy_end", c.entropy_end);
  c.entropy_decay_iters = r.get_or("entropy_decay_iters", c.entropy_decay_iters);
  c.episode_len = r.get_or("episode_len", c.episode_len);
  c.episodes_per_iter = r.get_or("episodes_per_iter", c.episodes_per_iter);
  c.epochs = r.get_or("epochs", c.epochs);
  c.minibatches = r.get_or("minibatches", c.minibatches);
  c.max_grad_norm = r.get_or("max_grad_norm", c.max_grad_norm);
  c.normalize_advantages = r.get_or("normalize_advantages", c.normalize_advantages);
  c.init_log_std = r.get_or("init_log_std", c.init_log_std);
  c.log_std_min = r.get_or("log_std_min", c.log_std_min);
  c.log_std_max = r.get_or("log_std_max", c.log_std_max);
  c.start_rate_min = r.get_or("start_rate_min", c.start_rate_min);
  c.start_rate_max = r.get_or("start_rate_max", c.start_rate_max);
  if (r.has("perf_mode")) c.perf_mode = perf_mode_from_string(r.get<std::string>("perf_mode"));
  if (r.has("sim_mode")) c.sim_mode = sim_mode_from_string(r.get<std::string>("sim_mode"));
  c.seed = r.get_or("seed", c.seed);
  c.threads = r.get_or("threads", c.threads);
  r.finish();
  c.validate();
  return c;
}

json to_json(const AgentSpec& s) {
  return {{"history_len", s.history_len},
          {"pn_hidden", s.pn_hidden},
          {"pn_output", s.pn_output},
          {"trunk", s.trunk}};
}

AgentSpec agent_spec_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  AgentSpec s;
  s.history_len = r.get<int>("history_len");
  s.pn_hidden = r.get<int>("pn_hidden");
  s.pn_output = r.get<int>("pn_output");
  s.trunk = r.get<std::vector<int>>("trunk");
  r.finish();
  return s;
}

json to_json(const nn::MlpSpec& s) {
  json layers = json::array();
  for (const nn::LayerSpec& l : s.layers) {
    layers.push_back({{"units", l.units},
                      {"activation", l.activation == nn::Activation::kTanh ? "tanh" : "identity"}});
  }
  return {{"input_dim", s.input_dim}, {"layers", layers}};
}

nn::MlpSpec mlp_spec_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  nn::MlpSpec s;
  s.input_dim = r.get<int>("input_dim");
  const json& layers = r.at("layers");
  if (!layers.is_array()) throw ParseError(path + ".layers: expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lp = path + ".layers[" + std::to_string(i) + "]";
    ObjectReader lr(layers[i], lp);
    nn::LayerSpec l;
    l.units = lr.get<int>("units");
    const auto act = lr.get<std::string>("activation");
    if (act == "tanh") {
      l.activation = nn::Activation::kTanh;
    } else if (act == "identity") {
      l.activation = nn::Activation::kIdentity;
    } else {
      throw ParseError(lp + ".activation: unknown activation '" + act + "'");
    }
    lr.finish();
    s.layers.push_back(l);
  }
  r.finish();
  return s;
}

}  // namespace prefcc::detail
