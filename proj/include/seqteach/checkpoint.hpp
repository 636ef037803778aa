#pragma once

// Versioned, checksummed JSON checkpoints for learner and optimizer state.
//
// File layout:
//   {"format": "seqteach-checkpoint", "version": 1, "kind": "learner" | "optimizer",
//    "checksum": "<fnv1a-64 of payload.dump(), hex>", "payload": {...}, "context": {...}}
//
// Doubles are written in shortest round-trip form, so save/load is bitwise
// exact. `context` is free-form and not covered by the checksum.

#include <cstdint>
#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "seqteach/learner.hpp"
#include "seqteach/optimizer.hpp"

namespace seqteach {

inline constexpr int kCheckpointVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

nlohmann::json to_json(const LearnerState& state);
nlohmann::json to_json(const OptimizerConfig& config);
nlohmann::json to_json(const OptimizerRunState& state);

/// Inverse of to_json; throws DataError on missing fields or inconsistent shapes.
LearnerState learner_from_json(const nlohmann::json& j);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);
OptimizerRunState run_state_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const LearnerState& state);
void save_checkpoint(const std::filesystem::path& path, const OptimizerRunState& state,
                     const nlohmann::json& context = nlohmann::json::object());

struct LoadedRun {
    OptimizerRunState state;
    nlohmann::json context;
};

/// Throw DataError on truncation, checksum mismatch, wrong kind or version.
LearnerState load_learner_checkpoint(const std::filesystem::path& path);
LoadedRun load_run_checkpoint(const std::filesystem::path& path);

}  // namespace seqteach
