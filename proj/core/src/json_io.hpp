#pragma once

// Strict JSON field access shared by the config and checkpoint readers.

#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "prefcc/agent.hpp"
#include "prefcc/env.hpp"
#include "prefcc/error.hpp"
#include "prefcc/trainer.hpp"

namespace prefcc::detail {

using nlohmann::json;

// Reads fields of one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path);

  bool has(const std::string& key) const { return obj_.contains(key); }
  const json& at(const std::string& key);
  std::string key_path(const std::string& key) const;

  template <typename T>
  T get(const std::string& key) {
    return convert<T>(at(key), key_path(key));
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  // Throws InvalidConfig naming the first unread key.
  void finish() const;

  template <typename T>
  static T convert(const json& j, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!j.is_number()) throw ParseError(path + ": expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
      }
      return j.get<T>();
    } catch (const json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json to_json(const WeightVector& w);
WeightVector weights_from_json(const json& j, const std::string& path);

json to_json(const TrainConfig& c);
// Fields not present keep their defaults.
TrainConfig train_config_from_json(const json& j, const std::string& path,
                                   TrainConfig base = {});

json to_json(const AgentSpec& s);
AgentSpec agent_spec_from_json(const json& j, const std::string& path);

json to_json(const nn::MlpSpec& s);
nn::MlpSpec mlp_spec_from_json(const json& j, const std::string& path);

PerfMode perf_mode_from_string(const std::string& s);
SimMode sim_mode_from_string(const std::string& s);
std::string to_string(PerfMode m);
std::string to_string(SimMode m);

}  // namespace prefcc::detail
