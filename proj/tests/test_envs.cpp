#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "gcr/envs.hpp"

using gcr::EnvConfig;
using gcr::PointMassEnv;

namespace {

EnvConfig named(std::string_view name) {
  EnvConfig c;
  c.name = std::string(name);
  return c;
}

// Independent per-component reward of one transition.
std::vector<double> reference_rewards(const PointMassEnv& env, const gcr::EnvState& before,
                                      const gcr::EnvState& after, std::array<double, 2> a) {
  std::vector<double> r;
  const auto& spec = env.spec();
  std::size_t band = 0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const std::string& n = spec[k].name;
    double raw = 0.0;
    if (n == "goal_velocity") {
      const double dx = 5.0 - before.position[0];
      const double dy = 0.0 - before.position[1];
      raw = (after.velocity[0] * dx + after.velocity[1] * dy) / std::sqrt(dx * dx + dy * dy);
    } else if (n == "plus_x_velocity") {
      raw = after.velocity[0];
    } else if (n == "minus_x_velocity") {
      raw = -after.velocity[0];
    } else if (n == "action_penalty") {
      raw = a[0] * a[0] + a[1] * a[1];
    } else {
      const auto& b = env.bands()[band++];
      double m = 0.0;
      const double speed = std::hypot(after.velocity[0], after.velocity[1]);
      switch (b.quantity) {
        case gcr::BandQuantity::kSpeed: m = speed; break;
        case gcr::BandQuantity::kHeading:
          m = speed < 0.05 ? std::nan("") : std::atan2(after.velocity[1], after.velocity[0]);
          break;
        case gcr::BandQuantity::kHeight: m = after.position[1]; break;
        case gcr::BandQuantity::kEnergy: m = std::min(0.5 * (a[0] * a[0] + a[1] * a[1]), 0.999999); break;
      }
      raw = m >= b.lo && m < b.hi ? 1.0 : 0.0;
    }
    r.push_back(spec[k].scale * raw * 0.05);
  }
  return r;
}

}  // namespace

TEST_CASE("zero action from rest is an equilibrium") {
  PointMassEnv env(named(gcr::kEnvAligned), 1);
  gcr::EnvState s;
  s.position = {1.0, -2.0};
  env.reset_to(s);
  const auto res = env.step(std::vector<double>{0.0, 0.0});
  CHECK(env.state().position == s.position);
  CHECK(env.state().velocity == std::array<double, 2>{0.0, 0.0});
  CHECK_FALSE(res.done);
}

TEST_CASE("one unit push from rest integrates a*dt, then damps") {
  PointMassEnv env(named(gcr::kEnvAligned), 1);
  env.reset_to(gcr::EnvState{});
  env.step(std::vector<double>{1.0, 0.0});
  CHECK(env.state().velocity[0] == doctest::Approx(0.05 * (1.0 - gcr::kDamping)).epsilon(1e-15));
  CHECK(env.state().velocity[1] == 0.0);
  CHECK(env.state().position[0] == doctest::Approx(0.05 * 0.95 * 0.05).epsilon(1e-15));
}

TEST_CASE("actions are clipped before the dynamics") {
  PointMassEnv a(named(gcr::kEnvAligned), 1);
  PointMassEnv b(named(gcr::kEnvAligned), 1);
  a.reset_to({});
  b.reset_to({});
  const auto ra = a.step(std::vector<double>{5.0, -9.0});
  const auto rb = b.step(std::vector<double>{1.0, -1.0});
  CHECK(a.state().velocity == b.state().velocity);
  CHECK(ra.reward == rb.reward);
}

TEST_CASE("environment specs") {
  const auto aligned = gcr::make_env(named(gcr::kEnvAligned), 0).spec();
  CHECK(aligned.size() == 2);
  CHECK(aligned[0].kind == gcr::ComponentKind::kTask);
  CHECK(aligned[1].kind == gcr::ComponentKind::kRegulariser);

  const auto conflict = gcr::make_env(named(gcr::kEnvConflict), 0).spec();
  CHECK(conflict.size() == 3);
  CHECK(conflict.split_indices().task.size() == 2);

  const auto styled = gcr::make_env(named(gcr::kEnvStyled), 0).spec();
  CHECK(styled.size() == 6);
  CHECK(styled.split_indices().regulariser == std::vector<std::size_t>{5});

  for (int m = 1; m <= 4; ++m) {
    EnvConfig c = named(gcr::kEnvStyled);
    for (int i = 0; i < m; ++i) c.bands.push_back({gcr::kAllBandQuantities[i], 2});
    CHECK(gcr::make_env(c, 0).spec().size() == static_cast<std::size_t>(m + 2));
  }

  EnvConfig single = named(gcr::kEnvAligned);
  single.with_regulariser = false;
  CHECK(gcr::make_env(single, 0).spec().size() == 1);

  CHECK_THROWS_AS(gcr::make_env(named("pointmass-bogus"), 0), std::invalid_argument);
  EnvConfig banded = named(gcr::kEnvAligned);
  banded.bands.push_back({gcr::BandQuantity::kSpeed, 1});
  CHECK_THROWS_AS(gcr::make_env(banded, 0), std::invalid_argument);
}

TEST_CASE("full random episodes match an offline replay of the rewards") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.8);
  for (auto name : {gcr::kEnvAligned, gcr::kEnvStyled, gcr::kEnvConflict}) {
    EnvConfig c = named(name);
    c.episode_steps = 200;
    PointMassEnv env = gcr::make_env(c, 11);
    env.reset();
    const std::size_t k = env.spec().size();
    std::vector<double> online(k, 0.0), offline(k, 0.0);
    std::vector<double> scalar_online, scalar_reference;
    int steps = 0;
    bool finished = false;
    while (!finished) {
      const gcr::EnvState before = env.state();
      std::array<double, 2> a = {noise(rng) + 0.5, noise(rng)};
      const auto res = env.step(std::vector<double>{a[0], a[1]});
      for (double& x : a) x = std::clamp(x, -1.0, 1.0);
      const auto ref = reference_rewards(env, before, env.state(), a);
      REQUIRE(res.reward.size() == k);
      double sum = 0.0, ref_sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        online[i] += res.reward[i];
        offline[i] += ref[i];
        sum += res.reward[i];
        ref_sum += ref[i];
      }
      CHECK(sum == doctest::Approx(ref_sum).epsilon(1e-12).scale(1.0));
      finished = res.done || res.timeout;
      ++steps;
    }
    CHECK(steps <= 200);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(online[i] == doctest::Approx(offline[i]).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("same seed and actions give bit-identical trajectories") {
  for (auto name : {gcr::kEnvAligned, gcr::kEnvStyled, gcr::kEnvConflict}) {
    PointMassEnv a = gcr::make_env(named(name), 42);
    PointMassEnv b = gcr::make_env(named(name), 42);
    CHECK(a.reset() == b.reset());
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
      const std::vector<double> act = {std::uniform_real_distribution<double>(-1, 1)(rng),
                                       std::uniform_real_distribution<double>(-1, 1)(rng)};
      const auto ra = a.step(act);
      const auto rb = b.step(act);
      CHECK(ra.observation == rb.observation);
      CHECK(ra.reward == rb.reward);
      if (ra.done || ra.timeout) break;
    }
  }
}

TEST_CASE("episode ends") {
  EnvConfig c = named(gcr::kEnvAligned);
  c.episode_steps = 5;
  PointMassEnv env(c, 0);
  env.reset();
  for (int t = 0; t < 4; ++t) CHECK_FALSE(env.step(std::vector<double>{0.0, 0.0}).timeout);
  const auto last = env.step(std::vector<double>{0.0, 0.0});
  CHECK(last.timeout);
  CHECK_FALSE(last.done);
  CHECK_THROWS_AS(env.step(std::vector<double>{0.0, 0.0}), std::logic_error);

  PointMassEnv edge(named(gcr::kEnvAligned), 0);
  gcr::EnvState s;
  s.position = {9.999, 0.0};
  s.velocity = {1.0, 0.0};
  edge.reset_to(s);
  const auto out = edge.step(std::vector<double>{1.0, 0.0});
  CHECK(out.done);
  CHECK_FALSE(out.timeout);
  CHECK(edge.needs_reset());
}

TEST_CASE("band objectives") {
  SUBCASE("bands partition each measured range into five ascending intervals") {
    for (auto q : gcr::kAllBandQuantities) {
      const auto e = gcr::band_edges(q);
      for (std::size_t i = 0; i + 1 < e.size(); ++i) CHECK(e[i] < e[i + 1]);
    }
  }
  SUBCASE("rewards are zero or the bonus, and exactly one level holds") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
      gcr::EnvState s;
      s.position = {u(rng) * 3, u(rng) * 2.4};
      s.velocity = {u(rng) * 0.7, u(rng) * 0.7};
      const std::vector<double> a = {u(rng), u(rng)};
      for (auto q : gcr::kAllBandQuantities) {
        const auto e = gcr::band_edges(q);
        int hits = 0;
        for (int level = 0; level < gcr::kNumBandLevels; ++level) {
          const gcr::BandObjective b{q, e[level], e[level + 1], 0.25};
          const double r = b.reward(s, a);
          CHECK((r == 0.0 || r == 0.25));
          hits += r > 0.0;
        }
        const double m = gcr::BandObjective::measure(q, s, a);
        if (std::isnan(m) || m >= e.back() || m < e.front()) {
          CHECK(hits == 0);
        } else {
          CHECK(hits == 1);
        }
      }
    }
  }
}

TEST_CASE("the default band set is jointly satisfiable on the way to the goal") {
  auto env = gcr::make_env(named(gcr::kEnvStyled), 4);
  env.reset();
  // Cruise along +x at 0.25, steering y back toward the axis.
  const double target_speed = 0.25;
  std::vector<double> totals(env.spec().size(), 0.0);
  int steps = 0;
  bool finished = false;
  while (!finished) {
    const auto& s = env.state();
    const double ax = 4.0 * (target_speed - s.velocity[0]) + target_speed * gcr::kDamping / gcr::kDt;
    const double ay = -1.0 * s.position[1] - 4.0 * s.velocity[1];
    const std::array<double, 2> a = {std::clamp(ax, -0.6, 0.6), std::clamp(ay, -0.3, 0.3)};
    const auto r = env.step(a);
    for (std::size_t k = 0; k < totals.size(); ++k) totals[k] += r.reward[k];
    finished = r.done || r.timeout;
    ++steps;
  }
  CHECK(steps == 400);
  const double max_band = 400 * gcr::kDt * env.config().band_bonus;
  for (std::size_t k = 0; k < totals.size(); ++k) {
    const auto& c = env.spec()[k];
    if (c.name.rfind("band_", 0) == 0) CHECK(totals[k] > 0.85 * max_band);
  }
  CHECK(totals[0] > 3.5);  // most of the 5 units toward the goal
}
