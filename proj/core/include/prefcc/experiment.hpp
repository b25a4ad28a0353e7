#pragma once

// Experiment configuration: link parameter ranges in physical units,
// training and evaluation settings, parsed from JSON with unknown keys
// rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prefcc/env.hpp"
#include "prefcc/netsim.hpp"
#include "prefcc/trainer.hpp"

namespace prefcc {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

// Link parameters in config units. A degenerate range (lo == hi) pins the
// value.
struct LinkRanges {
  Range bandwidth_mbps;
  Range one_way_delay_ms;
  Range queue_pkts;
  Range loss_rate;  // fraction, not percent

  // Throws InvalidConfig on empty ranges or values outside link validity.
  void validate() const;
  bool operator==(const LinkRanges&) const = default;
};

LinkConfig link_from_units(double bandwidth_mbps, double one_way_delay_ms, double queue_pkts,
                           double loss_rate, std::uint64_t seed = 0);

// Draws each parameter uniformly from its range, one link per episode.
LinkSource range_link_source(const LinkRanges& ranges);

// Parses "w_thr,w_lat,w_loss". Throws InvalidArgument on malformed text or
// a vector that breaks the weight invariants.
WeightVector parse_weights(std::string_view text);

struct FairnessConfig {
  int flows = 3;
  double bandwidth_mbps = 12.0;
  double one_way_delay_ms = 50.0;
  double queue_pkts = 133.0;
  double loss_rate = 0.0;
  double stagger_s = 20.0;
  double duration_s = 120.0;
  int trailing_s = 20;
  WeightVector weights = WeightVector::create(0.8, 0.1, 0.1);
};

struct EvalConfig {
  std::vector<LinkConfig> links;
  std::vector<WeightVector> weights;
  EvalOptions options;
  std::optional<FairnessConfig> fairness;
  bool friendliness = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  LinkRanges link;
  TrainConfig train;
  OfflineConfig offline;
  EvalConfig eval;
  std::string output_dir;
};

// Required keys: "seed", "link". Throws InvalidConfig naming a missing or
// unknown key, ParseError on malformed JSON.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace prefcc
