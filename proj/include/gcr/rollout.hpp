#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gcr/envs.hpp"
#include "gcr/nets.hpp"
#include "gcr/tensor.hpp"

namespace gcr {

// On-policy segment of num_envs x horizon transitions. Rows are time-major:
// row = t * num_envs + e.
struct TrajectoryBatch {
  std::size_t num_envs = 0;
  std::size_t horizon = 0;

  Tensor observations;             // [N, obs_dim]
  Tensor actions;                  // [N, act_dim], unclipped policy samples
  std::vector<double> log_probs;   // [N], behaviour policy
  Tensor rewards;                  // [N, K], scaled reward vectors
  std::vector<std::uint8_t> dones;     // termination, no bootstrap
  std::vector<std::uint8_t> timeouts;  // time limit, bootstrap
  Tensor values;                   // [N, H], V(s_t) per critic head
  // V(s_{t+1}) of the true successor: the final observation when the episode
  // ended at t, s_T at the segment end, otherwise V(s_{t+1}).
  Tensor next_values;              // [N, H]

  // Undiscounted per-component returns of episodes that ended in this segment.
  std::vector<std::vector<double>> episode_returns;

  std::size_t size() const { return num_envs * horizon; }
  std::size_t row(std::size_t t, std::size_t e) const { return t * num_envs + e; }
  std::size_t num_components() const { return rewards.cols(); }
};

// [N, 1] tensor of per-row reward sums.
Tensor summed_rewards(const TrajectoryBatch& batch);

// Steps a fixed set of environments with the current policy. Episode state
// (including partial returns) carries over between segments.
class RolloutCollector {
 public:
  // With `stagger_episodes`, each environment's first episode starts at a
  // random step so that time limits are not reached in lockstep.
  RolloutCollector(std::vector<PointMassEnv> envs, std::uint64_t seed,
                   bool stagger_episodes = false);

  const RewardSpec& spec() const { return envs_.front().spec(); }
  std::size_t num_envs() const { return envs_.size(); }

  TrajectoryBatch collect(const GaussianActor& actor, const MultiHeadCritic& critic,
                          std::size_t horizon);

 private:
  std::vector<PointMassEnv> envs_;
  std::vector<Rng> action_rngs_;
  Tensor current_obs_;
  std::vector<std::vector<double>> running_returns_;
  Rng stagger_rng_;
  bool stagger_episodes_;
  bool started_ = false;
};

}  // namespace gcr
