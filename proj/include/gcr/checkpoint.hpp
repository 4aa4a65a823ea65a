#pragma once

#include <filesystem>
#include <string>

#include "gcr/nets.hpp"
#include "gcr/reward_spec.hpp"

namespace gcr {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  RewardSpec spec;
  GaussianActor actor;
  MultiHeadCritic critic;
};

// Versioned JSON document: reward spec, architecture, every parameter as a
// named list of decimal doubles, and probe observations with the critic
// values they produced at save time.
std::string checkpoint_to_string(const RewardSpec& spec, const GaussianActor& actor,
                                 const MultiHeadCritic& critic);
void save_checkpoint(const std::filesystem::path& path, const RewardSpec& spec,
                     const GaussianActor& actor, const MultiHeadCritic& critic);

// Rebuilds the networks and re-evaluates the stored probes; any bit-level
// difference in critic values is an error.
Checkpoint checkpoint_from_string(const std::string& text);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gcr
