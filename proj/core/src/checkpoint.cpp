#include "prefcc/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace prefcc {

using detail::json;
using detail::ObjectReader;

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path + ": expected [lo, hi]");
  return {ObjectReader::convert<double>(j[0], path + "[0]"),
          ObjectReader::convert<double>(j[1], path + "[1]")};
}

json tensors_json(const std::vector<nn::ParamTensor>& tensors) {
  json out = json::array();
  for (const nn::ParamTensor& t : tensors) {
    out.push_back({{"name", t.name}, {"shape", t.shape}, {"values", t.values}});
  }
  return out;
}

std::vector<nn::ParamTensor> tensors_from(const json& j) {
  if (!j.is_array()) throw ParseError("tensors: expected an array");
  std::vector<nn::ParamTensor> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "tensors[" + std::to_string(i) + "]";
    ObjectReader r(j[i], path);
    nn::ParamTensor t;
    t.name = r.get<std::string>("name");
    t.shape = r.get<std::vector<std::size_t>>("shape");
    t.values = r.get<std::vector<double>>("values");
    r.finish();
    std::size_t count = 1;
    for (std::size_t d : t.shape) count *= d;
    if (t.shape.empty() || count != t.values.size()) {
      throw ShapeMismatch("tensor '" + t.name + "' holds " + std::to_string(t.values.size()) +
                          " values for its declared shape");
    }
    out.push_back(std::move(t));
  }
  return out;
}

void check_spec(const json& networks, const char* key, const nn::MlpSpec& expected) {
  const nn::MlpSpec stored =
      detail::mlp_spec_from_json(networks.at(key), std::string("networks.") + key);
  if (!(stored == expected)) {
    throw ShapeMismatch(std::string("network '") + key + "' does not match the agent spec");
  }
}

}  // namespace

Checkpoint make_checkpoint(const Learner& learner, const RequirementPool& pool,
                           std::optional<LinkRanges> link) {
  Checkpoint c;
  c.spec = learner.actor.spec;
  c.config = learner.config;
  c.actor = learner.actor;
  c.critic = learner.critic;
  c.pool = pool.items();
  c.pool_capacity = pool.capacity();
  c.seed = learner.config.seed;
  c.iterations_trained = learner.iteration;
  c.link = std::move(link);
  return c;
}

Learner learner_from_checkpoint(const Checkpoint& ckpt) {
  return Learner::from_params(ckpt.config, ckpt.actor, ckpt.critic, ckpt.iterations_trained);
}

RequirementPool pool_from_checkpoint(const Checkpoint& ckpt) {
  RequirementPool pool(ckpt.pool_capacity);
  for (const WeightVector& w : ckpt.pool) pool.insert(w);
  return pool;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json pool = json::array();
  for (const WeightVector& w : ckpt.pool) pool.push_back(detail::to_json(w));
  std::vector<nn::ParamTensor> tensors = to_tensors(ckpt.actor);
  const std::vector<nn::ParamTensor> critic = to_tensors(ckpt.critic);
  tensors.insert(tensors.end(), critic.begin(), critic.end());

  json doc = {
      {"format_version", kCheckpointFormatVersion},
      {"agent", detail::to_json(ckpt.spec)},
      {"networks",
       {{"preference", detail::to_json(ckpt.spec.pn_spec())},
        {"trunk", detail::to_json(ckpt.spec.trunk_spec())},
        {"head", detail::to_json(ckpt.spec.head_spec())}}},
      {"train_config", detail::to_json(ckpt.config)},
      {"value_scale", ckpt.critic.value_scale},
      {"seed", ckpt.seed},
      {"iterations_trained", ckpt.iterations_trained},
      {"pool", {{"capacity", ckpt.pool_capacity}, {"items", pool}}},
      {"tensors", tensors_json(tensors)},
  };
  if (ckpt.link) {
    doc["link"] = {{"bandwidth_mbps", range_json(ckpt.link->bandwidth_mbps)},
                   {"one_way_delay_ms", range_json(ckpt.link->one_way_delay_ms)},
                   {"queue_pkts", range_json(ckpt.link->queue_pkts)},
                   {"loss_rate", range_json(ckpt.link->loss_rate)}};
  }
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw ParseError("checkpoint has no format_version");
  }
  const json& version = doc.at("format_version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kCheckpointFormatVersion) {
    throw VersionMismatch("unsupported checkpoint format_version " + version.dump() +
                          " (expected " + std::to_string(kCheckpointFormatVersion) + ")");
  }

  try {
    ObjectReader r(doc, "");
    r.at("format_version");
    Checkpoint c;
    c.spec = detail::agent_spec_from_json(r.at("agent"), "agent");
    const json& networks = r.at("networks");
    ObjectReader nr(networks, "networks");
    nr.at("preference");
    nr.at("trunk");
    nr.at("head");
    nr.finish();
    check_spec(networks, "preference", c.spec.pn_spec());
    check_spec(networks, "trunk", c.spec.trunk_spec());
    check_spec(networks, "head", c.spec.head_spec());
    c.config = detail::train_config_from_json(r.at("train_config"), "train_config");
    const double value_scale = r.get<double>("value_scale");
    c.seed = r.get<std::uint64_t>("seed");
    c.iterations_trained = r.get<std::int64_t>("iterations_trained");

    ObjectReader pr(r.at("pool"), "pool");
    c.pool_capacity = pr.get<std::size_t>("capacity");
    const json& items = pr.at("items");
    pr.finish();
    if (!items.is_array()) throw ParseError("pool.items: expected an array");
    for (std::size_t i = 0; i < items.size(); ++i) {
      c.pool.push_back(detail::weights_from_json(items[i], "pool.items[" + std::to_string(i) + "]"));
    }

    if (r.has("link")) {
      ObjectReader lr(r.at("link"), "link");
      LinkRanges l;
      l.bandwidth_mbps = range_from(lr.at("bandwidth_mbps"), "link.bandwidth_mbps");
      l.one_way_delay_ms = range_from(lr.at("one_way_delay_ms"), "link.one_way_delay_ms");
      l.queue_pkts = range_from(lr.at("queue_pkts"), "link.queue_pkts");
      l.loss_rate = range_from(lr.at("loss_rate"), "link.loss_rate");
      lr.finish();
      l.validate();
      c.link = l;
    }

    const std::vector<nn::ParamTensor> tensors = tensors_from(r.at("tensors"));
    r.finish();
    c.actor = actor_from_tensors(c.spec, tensors);
    c.critic = critic_from_tensors(c.spec, value_scale, tensors);
    return c;
  } catch (const InvalidConfig& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string text = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read checkpoint '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_checkpoint(text.str());
}

}  // namespace prefcc
