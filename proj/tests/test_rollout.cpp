#include <cmath>

#include "doctest.h"
#include "gcr/rollout.hpp"
#include "test_support.hpp"

using gcr::EnvConfig;
using gcr::GaussianActor;
using gcr::MultiHeadCritic;
using gcr::RolloutCollector;
using gcr::Tensor;

namespace {

EnvConfig short_config() {
  EnvConfig c;
  c.name = std::string(gcr::kEnvStyled);
  c.episode_steps = 7;
  return c;
}

std::vector<gcr::PointMassEnv> envs(const EnvConfig& c, std::size_t n, std::uint64_t seed) {
  std::vector<gcr::PointMassEnv> out;
  for (std::size_t e = 0; e < n; ++e) out.push_back(gcr::make_env(c, seed + e));
  return out;
}

struct Setup {
  EnvConfig config = short_config();
  gcr::RewardSpec spec = gcr::make_env(config, 0).spec();
  GaussianActor actor{4, 2, {8}, 1};
  MultiHeadCritic critic{4, {8}, spec, 2};
};

}  // namespace

TEST_CASE("horizon one, single env") {
  Setup s;
  s.config.episode_steps = 400;
  RolloutCollector col(envs(s.config, 1, 5), 3);
  const auto b = col.collect(s.actor, s.critic, 1);
  CHECK(b.size() == 1);
  CHECK(b.rewards.shape() == std::vector<std::size_t>{1, s.spec.size()});
  CHECK(b.values.shape() == std::vector<std::size_t>{1, s.spec.size()});
  // Bootstrap is V of the state reached after the single step.
  gcr::PointMassEnv replay = gcr::make_env(s.config, 5);
  replay.reset();
  const auto res = replay.step(std::span<const double>(b.actions.values().data(), 2));
  const Tensor v1 = s.critic.values(Tensor::matrix(1, 4, res.observation));
  CHECK(b.next_values.storage() == v1.storage());
}

TEST_CASE("collection is deterministic") {
  Setup s;
  RolloutCollector a(envs(s.config, 3, 10), 4, true);
  RolloutCollector b(envs(s.config, 3, 10), 4, true);
  for (int seg = 0; seg < 3; ++seg) {
    const auto x = a.collect(s.actor, s.critic, 9);
    const auto y = b.collect(s.actor, s.critic, 9);
    CHECK(x.observations.storage() == y.observations.storage());
    CHECK(x.actions.storage() == y.actions.storage());
    CHECK(x.log_probs == y.log_probs);
    CHECK(x.rewards.storage() == y.rewards.storage());
    CHECK(x.next_values.storage() == y.next_values.storage());
  }
}

TEST_CASE("stored log-probs equal re-evaluation") {
  Setup s;
  RolloutCollector col(envs(s.config, 4, 0), 1);
  const auto b = col.collect(s.actor, s.critic, 16);
  const auto fresh = s.actor.log_prob(b.observations, b.actions);
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(std::isfinite(b.log_probs[i]));
    CHECK(std::abs(fresh[i] - b.log_probs[i]) <= 1e-12);
  }
}

TEST_CASE("episode boundaries and bootstrap values") {
  Setup s;
  const std::size_t num_envs = 2;
  const std::size_t horizon = 17;
  RolloutCollector col(envs(s.config, num_envs, 20), 6);
  const auto b = col.collect(s.actor, s.critic, horizon);
  const std::size_t k = s.spec.size();

  for (std::size_t e = 0; e < num_envs; ++e) {
    gcr::PointMassEnv replay = gcr::make_env(s.config, 20 + e);
    std::vector<double> obs = replay.reset();
    std::vector<double> episode(k, 0.0);
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::size_t row = b.row(t, e);
      for (std::size_t d = 0; d < 4; ++d) CHECK(b.observations.at(row, d) == obs[d]);
      const auto res = replay.step(std::span<const double>(b.actions.values().data() + row * 2, 2));
      CHECK(static_cast<bool>(b.dones[row]) == res.done);
      CHECK(static_cast<bool>(b.timeouts[row]) == res.timeout);
      for (std::size_t c = 0; c < k; ++c) {
        CHECK(b.rewards.at(row, c) == res.reward[c]);
        episode[c] += res.reward[c];
      }
      const Tensor v_next = s.critic.values(Tensor::matrix(1, 4, res.observation));
      for (std::size_t c = 0; c < k; ++c) CHECK(b.next_values.at(row, c) == v_next[c]);
      obs = res.observation;
      if (res.done || res.timeout) {
        obs = replay.reset();
        CHECK(obs[2] == 0.0);
        CHECK(obs[3] == 0.0);
        std::fill(episode.begin(), episode.end(), 0.0);
      }
    }
  }
  // Two full 7-step episodes per env fit in 17 steps.
  CHECK(b.episode_returns.size() == 4);
}

TEST_CASE("summed rewards") {
  Setup s;
  RolloutCollector col(envs(s.config, 2, 0), 1);
  const auto b = col.collect(s.actor, s.critic, 5);
  const Tensor total = gcr::summed_rewards(b);
  CHECK(total.shape() == std::vector<std::size_t>{10, 1});
  for (std::size_t r = 0; r < 10; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < s.spec.size(); ++c) sum += b.rewards.at(r, c);
    CHECK(total[r] == sum);
  }
}
