#pragma once

// Versioned JSON checkpoints: network specs, named parameter tensors, the
// training config, the requirement pool and the master seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prefcc/agent.hpp"
#include "prefcc/experiment.hpp"
#include "prefcc/trainer.hpp"

namespace prefcc {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  AgentSpec spec;
  TrainConfig config;
  ActorParams actor;
  CriticParams critic;
  std::vector<WeightVector> pool;
  std::size_t pool_capacity = 256;
  std::uint64_t seed = 0;
  std::int64_t iterations_trained = 0;
  // Link ranges the model was trained on, reused by adaptation.
  std::optional<LinkRanges> link;
};

Checkpoint make_checkpoint(const Learner& learner, const RequirementPool& pool,
                           std::optional<LinkRanges> link = std::nullopt);
// Fresh optimizer state; the iteration counter continues.
Learner learner_from_checkpoint(const Checkpoint& ckpt);
RequirementPool pool_from_checkpoint(const Checkpoint& ckpt);

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Validates the format version before anything else, then shapes.
// Throws VersionMismatch, ShapeMismatch or ParseError.
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace prefcc
