#include "gcr/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gcr/errors.hpp"

namespace gcr {

Tensor summed_rewards(const TrajectoryBatch& batch) {
  Tensor out({batch.size(), 1});
  const std::size_t k = batch.rewards.cols();
  for (std::size_t r = 0; r < batch.size(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += batch.rewards.at(r, c);
    out[r] = s;
  }
  return out;
}

RolloutCollector::RolloutCollector(std::vector<PointMassEnv> envs, std::uint64_t seed,
                                   bool stagger_episodes)
    : envs_(std::move(envs)), stagger_rng_(seed ^ 0x9e3779b97f4a7c15ULL),
      stagger_episodes_(stagger_episodes) {
  if (envs_.empty()) throw std::invalid_argument("rollout: at least one environment required");
  for (const auto& env : envs_) {
    if (!(env.spec() == envs_.front().spec())) {
      throw std::invalid_argument("rollout: environments disagree on the reward spec");
    }
  }
  std::seed_seq seq{seed, std::uint64_t{0x5eed}};
  std::vector<std::uint32_t> seeds(envs_.size());
  seq.generate(seeds.begin(), seeds.end());
  for (std::size_t e = 0; e < envs_.size(); ++e) action_rngs_.emplace_back(seeds[e]);
  running_returns_.assign(envs_.size(), std::vector<double>(spec().size(), 0.0));
}

TrajectoryBatch RolloutCollector::collect(const GaussianActor& actor,
                                          const MultiHeadCritic& critic,
                                          std::size_t horizon) {
  if (horizon == 0) throw std::invalid_argument("rollout: horizon must be positive");
  const std::size_t num_envs = envs_.size();
  const std::size_t obs_dim = PointMassEnv::kObsDim;
  const std::size_t act_dim = PointMassEnv::kActDim;
  const std::size_t k = spec().size();
  const std::size_t heads = critic.num_heads();
  const std::size_t n = num_envs * horizon;

  if (!started_) {
    current_obs_ = Tensor({num_envs, obs_dim});
    for (std::size_t e = 0; e < num_envs; ++e) {
      auto obs = envs_[e].reset();
      if (stagger_episodes_) {
        EnvState s = envs_[e].state();
        std::uniform_int_distribution<int> offset(0, envs_[e].config().episode_steps - 1);
        s.step = offset(stagger_rng_);
        obs = envs_[e].reset_to(s);
      }
      std::copy(obs.begin(), obs.end(), current_obs_.values().begin() + e * obs_dim);
    }
    started_ = true;
  }

  TrajectoryBatch batch;
  batch.num_envs = num_envs;
  batch.horizon = horizon;
  batch.observations = Tensor({n, obs_dim});
  batch.actions = Tensor({n, act_dim});
  batch.log_probs.assign(n, 0.0);
  batch.rewards = Tensor({n, k});
  batch.dones.assign(n, 0);
  batch.timeouts.assign(n, 0);
  batch.values = Tensor({n, heads});
  batch.next_values = Tensor({n, heads});

  std::vector<std::size_t> ended_rows;
  std::vector<double> final_obs;

  for (std::size_t t = 0; t < horizon; ++t) {
    const ActionBatch act = actor.sample(current_obs_, action_rngs_);
    const Tensor v = critic.values(current_obs_);
    ended_rows.clear();
    final_obs.clear();
    for (std::size_t e = 0; e < num_envs; ++e) {
      const std::size_t row = batch.row(t, e);
      std::copy_n(current_obs_.values().begin() + e * obs_dim, obs_dim,
                  batch.observations.values().begin() + row * obs_dim);
      std::copy_n(act.actions.values().begin() + e * act_dim, act_dim,
                  batch.actions.values().begin() + row * act_dim);
      std::copy_n(v.values().begin() + e * heads, heads,
                  batch.values.values().begin() + row * heads);
      batch.log_probs[row] = act.log_prob[e];
      if (!std::isfinite(act.log_prob[e])) {
        throw NumericalError("rollout: non-finite log-probability at env " + std::to_string(e) +
                             ", step " + std::to_string(t));
      }

      StepResult res = envs_[e].step(
          std::span<const double>(act.actions.values().data() + e * act_dim, act_dim));
      for (double o : res.observation) {
        if (!std::isfinite(o)) {
          throw NumericalError("rollout: environment " + std::to_string(e) +
                               " produced a non-finite observation at step " +
                               std::to_string(t));
        }
      }
      for (std::size_t c = 0; c < k; ++c) {
        batch.rewards.at(row, c) = res.reward[c];
        running_returns_[e][c] += res.reward[c];
      }
      batch.dones[row] = res.done;
      batch.timeouts[row] = res.timeout;
      if (res.done || res.timeout) {
        ended_rows.push_back(row);
        final_obs.insert(final_obs.end(), res.observation.begin(), res.observation.end());
        batch.episode_returns.push_back(running_returns_[e]);
        std::fill(running_returns_[e].begin(), running_returns_[e].end(), 0.0);
        res.observation = envs_[e].reset();
      }
      std::copy(res.observation.begin(), res.observation.end(),
                current_obs_.values().begin() + e * obs_dim);
    }
    if (!ended_rows.empty()) {
      const Tensor fv = critic.values(Tensor({ended_rows.size(), obs_dim}, final_obs));
      for (std::size_t i = 0; i < ended_rows.size(); ++i) {
        std::copy_n(fv.values().begin() + i * heads, heads,
                    batch.next_values.values().begin() + ended_rows[i] * heads);
      }
    }
  }

  const Tensor bootstrap = critic.values(current_obs_);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t e = 0; e < num_envs; ++e) {
      const std::size_t row = batch.row(t, e);
      if (batch.dones[row] || batch.timeouts[row]) continue;
      const double* src = t + 1 < horizon
                              ? batch.values.values().data() + batch.row(t + 1, e) * heads
                              : bootstrap.values().data() + e * heads;
      std::copy_n(src, heads, batch.next_values.values().begin() + row * heads);
    }
  }
  return batch;
}

}  // namespace gcr
