#include <cmath>

#include "doctest.h"
#include "gcr/errors.hpp"
#include "gcr/losses.hpp"
#include "gcr/optim.hpp"
#include "gcr/trainer.hpp"
#include "test_support.hpp"

using gcr::AlgoMode;
using gcr::TrainConfig;
using gcr::Trainer;

namespace {

TrainConfig small_config(AlgoMode algo, std::string env = "pointmass-aligned") {
  TrainConfig c;
  c.algo = algo;
  c.seed = 3;
  c.num_envs = 4;
  c.horizon = 16;
  c.minibatches = 2;
  c.epochs = 2;
  c.hidden = {8};
  c.updates = 4;
  c.env.name = std::move(env);
  c.env.episode_steps = 24;
  c.log.timing = false;
  return c;
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
  return gcr::testing::max_abs_diff(a, b);
}

}  // namespace

TEST_CASE("learning-rate rule") {
  CHECK(gcr::adapt_lr(1e-3, 0.01, 0.01) == 1e-3);
  CHECK(gcr::adapt_lr(1e-3, 0.04, 0.01) == doctest::Approx(1e-3 / 1.5));
  CHECK(gcr::adapt_lr(1e-3, 0.0, 0.01) == doctest::Approx(1.5e-3));
  CHECK(gcr::adapt_lr(9e-3, 0.0, 0.01) == 1e-2);
  CHECK(gcr::adapt_lr(1.2e-6, 1.0, 0.01) == 1e-6);
  CHECK(gcr::adapt_lr(1e-3, 0.02, 0.01) == 1e-3);  // boundary of the dead zone
  CHECK(gcr::adapt_lr(1e-3, 0.005, 0.01) == 1e-3);
}

TEST_CASE("Adam against a hand computation") {
  gcr::Adam opt(2);
  std::vector<double> p = {1.0, -1.0};
  opt.step(p, std::vector<double>{0.5, -2.0}, 0.1);
  // First step: m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(-1.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
  opt.step(p, std::vector<double>{0.5, 0.0}, 0.1);
  const double m = (0.9 * 0.1 * 0.5 + 0.1 * 0.5) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 0.25 + 0.001 * 0.25) / (1 - 0.999 * 0.999);
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - 0.1 * m / (std::sqrt(v) + 1e-8))
                     .epsilon(1e-12));
  CHECK(opt.steps() == 2);
}

TEST_CASE("gradient norm clipping") {
  std::vector<double> g = {3.0, 4.0};
  CHECK(gcr::clip_grad_norm(g, 1.0) == 5.0);
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));
  std::vector<double> small = {0.1, 0.1};
  gcr::clip_grad_norm(small, 1.0);
  CHECK(small == std::vector<double>{0.1, 0.1});
}

TEST_CASE("algorithm names") {
  for (const auto& name : gcr::algo_mode_names()) CHECK(gcr::to_string(gcr::parse_algo_mode(name)) == name);
  try {
    gcr::parse_algo_mode("bogus");
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("gcr-noprio") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  auto c = small_config(AlgoMode::kGcr);
  CHECK_NOTHROW(c.validate());
  c.minibatches = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config(AlgoMode::kGcr, "pointmass-bogus");
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config(AlgoMode::kGcr);
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("ppo collapses the critic to one head") {
  Trainer t(small_config(AlgoMode::kPpo, "pointmass-styled"));
  CHECK(t.critic_spec().size() == 1);
  CHECK(t.critic().num_heads() == 1);
  CHECK(t.env_spec().size() > 1);
  Trainer g(small_config(AlgoMode::kGcr, "pointmass-styled"));
  CHECK(g.critic().num_heads() == g.env_spec().size());
}

TEST_CASE("all modes coincide with a single reward component") {
  auto base = small_config(AlgoMode::kPpo);
  base.env.with_regulariser = false;
  base.updates = 6;
  Trainer ref(base);
  std::vector<std::vector<double>> ref_actor;
  ref.train([&](const gcr::UpdateRecord&) { ref_actor.push_back(ref.actor().flat()); });
  for (AlgoMode m : {AlgoMode::kGcr, AlgoMode::kGcrNoPriority, AlgoMode::kMultihead}) {
    auto c = base;
    c.algo = m;
    Trainer t(c);
    std::size_t u = 0;
    double drift = 0.0;
    t.train([&](const gcr::UpdateRecord&) { drift = std::max(drift, linf(t.actor().flat(), ref_actor[u++])); });
    INFO(gcr::to_string(m));
    CHECK(drift < 1e-12);
    CHECK(linf(t.critic().flat(), ref.critic().flat()) < 1e-12);
  }
}

TEST_CASE("opposed objectives conflict from the start") {
  auto c = small_config(AlgoMode::kGcr, "pointmass-conflict");
  Trainer t(c);
  const auto rec = t.step();
  CHECK(rec.conflict_count > 0.0);
}

TEST_CASE("applied direction never trades a task for the regulariser") {
  auto c = small_config(AlgoMode::kGcr);
  c.entropy_coef = 0.0;
  c.updates = 8;
  c.log.cosine_cadence = 1;
  c.log.gradient_vectors = true;
  Trainer t(c);
  int checked = 0;
  t.train([&](const gcr::UpdateRecord& rec) {
    REQUIRE(rec.cosine.has_value());
    const auto& snap = *rec.cosine;
    REQUIRE(snap.gradients.size() == 2);
    const auto& task = snap.gradients[0];
    std::vector<double> naive(task.size());
    for (std::size_t i = 0; i < naive.size(); ++i) naive[i] = task[i] + snap.gradients[1][i];
    const double scale = gcr::dot(task, task) + 1e-300;
    CHECK(gcr::dot(snap.final_gradient, task) >= gcr::dot(naive, task) - 1e-12 * scale);
    ++checked;
  });
  CHECK(checked == 8);
}

TEST_CASE("records are deterministic and well formed") {
  auto c = small_config(AlgoMode::kGcr, "pointmass-styled");
  Trainer a(c), b(c);
  for (int u = 0; u < c.updates; ++u) {
    const auto ra = a.step();
    const auto rb = b.step();
    CHECK(ra.update == u);
    CHECK(ra.loss_surrogate_sum == rb.loss_surrogate_sum);
    CHECK(ra.loss_value == rb.loss_value);
    CHECK(ra.kl == rb.kl);
    CHECK(ra.conflict_count == rb.conflict_count);
    CHECK(ra.t_collect_s == 0.0);
    CHECK(ra.t_project_s == 0.0);
    CHECK(ra.lr > 0.0);
    CHECK(ra.loss_value >= 0.0);
    CHECK(ra.component_returns.size() == a.env_spec().size());
    if (std::isnan(ra.mean_return)) {
      CHECK(std::isnan(rb.mean_return));
    } else {
      CHECK(ra.mean_return == rb.mean_return);
      double total = 0.0;
      for (double v : ra.component_returns) total += v;
      CHECK(total == doctest::Approx(ra.mean_return));
    }
  }
  CHECK(a.actor().flat() == b.actor().flat());
  CHECK(a.updates_done() == c.updates);
}

TEST_CASE("mean return is missing until an episode finishes") {
  auto c = small_config(AlgoMode::kGcr);
  c.env.episode_steps = 1000;
  Trainer t(c);
  const auto rec = t.step();
  CHECK(rec.episodes_finished == 0);
  CHECK(std::isnan(rec.mean_return));
}

TEST_CASE("timing is recorded when enabled") {
  auto c = small_config(AlgoMode::kGcr, "pointmass-styled");
  c.log.timing = true;
  Trainer t(c);
  const auto rec = t.step();
  CHECK(rec.t_collect_s > 0.0);
  CHECK(rec.t_update_s > 0.0);
  CHECK(rec.t_project_s > 0.0);
  CHECK(rec.t_project_s <= rec.t_update_s);
}

TEST_CASE("a diverging update aborts and keeps the previous parameters") {
  auto c = small_config(AlgoMode::kGcr);
  c.learning_rate = 1e300;
  Trainer t(c);
  const auto actor_before = t.actor().flat();
  const auto critic_before = t.critic().flat();
  CHECK_THROWS_AS(t.step(), gcr::NumericalError);
  CHECK(t.last_good().actor == actor_before);
  CHECK(t.last_good().critic == critic_before);
  const auto [actor, critic] = t.last_good_networks();
  CHECK(actor.flat() == actor_before);
  CHECK(t.updates_done() == 0);
}

TEST_CASE("projected entropy keeps conflict stats over reward components") {
  auto c = small_config(AlgoMode::kGcr, "pointmass-styled");
  c.project_entropy = true;
  c.log.cosine_cadence = 1;
  Trainer t(c);
  const auto rec = t.step();
  const double k = static_cast<double>(t.env_spec().size());
  CHECK(rec.conflict_count <= k * (k - 1) / 2);
  CHECK(rec.cosine->num_components == t.env_spec().size());
}
