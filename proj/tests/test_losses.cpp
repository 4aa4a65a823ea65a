#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gcr/errors.hpp"
#include "gcr/losses.hpp"
#include "loss_checks.hpp"
#include "test_support.hpp"

using gcr::GaussianActor;
using gcr::MiniBatch;
using gcr::Tensor;
using gcr::diff::Tape;

namespace {

MiniBatch on_policy_batch(const GaussianActor& actor, std::size_t n, std::size_t k,
                          gcr::testing::Rng& rng) {
  MiniBatch mb;
  mb.observations = gcr::testing::random_tensor({n, actor.obs_dim()}, rng);
  mb.actions = gcr::testing::random_tensor({n, actor.act_dim()}, rng);
  mb.old_log_probs = actor.log_prob(mb.observations, mb.actions);
  mb.advantages = gcr::testing::random_tensor({n, k}, rng, -2, 2);
  return mb;
}

double surrogate_value(std::vector<double> logp, std::vector<double> old, std::vector<double> adv,
                       double clip) {
  Tape tape;
  const auto lp = tape.parameter(Tensor::vector(std::move(logp)));
  return tape.value(gcr::surrogate_loss(tape, lp, old, adv, clip))[0];
}

}  // namespace

TEST_CASE("surrogate examples") {
  SUBCASE("ratio one gives minus the mean advantage") {
    CHECK(surrogate_value({0.3, -1.0, 2.0}, {0.3, -1.0, 2.0}, {1.0, -2.0, 4.0}, 0.2) ==
          doctest::Approx(-1.0).epsilon(1e-15));
  }
  SUBCASE("zero advantages give zero loss and gradient") {
    Tape tape;
    const auto lp = tape.parameter(Tensor::vector({0.1, 0.5}));
    const auto l = gcr::surrogate_loss(tape, lp, std::vector<double>{0.0, 0.0},
                                       std::vector<double>{0.0, 0.0}, 0.2);
    CHECK(tape.value(l)[0] == 0.0);
    const auto grads = tape.backward(l, Tensor::scalar(1.0));
    for (double g : grads[0].values()) CHECK(g == 0.0);
  }
  SUBCASE("clipped branch") {
    CHECK(surrogate_value({std::log(1.5)}, {0.0}, {1.0}, 0.2) ==
          doctest::Approx(-1.2).epsilon(1e-14));
  }
}

TEST_CASE("at ratio one the gradient is the unclipped policy gradient") {
  gcr::testing::Rng rng(1);
  GaussianActor actor(3, 2, {5}, 4);
  const MiniBatch mb = on_policy_batch(actor, 12, 3, rng);
  const auto pg = gcr::component_policy_gradients(actor, mb, 0.2);
  CHECK(pg.mean_ratio == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(pg.approx_kl) < 1e-15);
  for (std::size_t c = 0; c < 3; ++c) {
    // -mean(A * grad log pi)
    Tape tape;
    const auto p = actor.bind(tape);
    const auto lp = actor.log_prob(tape, p, mb.observations, mb.actions);
    Tensor seed({12});
    for (std::size_t i = 0; i < 12; ++i) seed[i] = -mb.advantages.at(i, c) / 12.0;
    const auto expected = actor.layout().flatten(tape.backward(lp, seed));
    CHECK(gcr::testing::max_abs_diff(expected, pg.gradients[c]) < 1e-13);
  }
}

TEST_CASE("per-component gradients sum to the scalarized surrogate gradient at ratio one") {
  gcr::testing::Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    GaussianActor actor(4, 2, {6, 6}, trial);
    MiniBatch mb = on_policy_batch(actor, 16, 4, rng);
    const auto pg = gcr::component_policy_gradients(actor, mb, 0.2);
    std::vector<double> sum(actor.size(), 0.0);
    for (const auto& g : pg.gradients) {
      for (std::size_t i = 0; i < g.size(); ++i) sum[i] += g[i];
    }
    MiniBatch scalar = mb;
    scalar.advantages = Tensor({16, 1});
    for (std::size_t r = 0; r < 16; ++r) {
      for (std::size_t c = 0; c < 4; ++c) scalar.advantages[r] += mb.advantages.at(r, c);
    }
    const auto single = gcr::component_policy_gradients(actor, scalar, 0.2);
    CHECK(gcr::testing::max_abs_diff(sum, single.gradients[0]) < 1e-10);
  }
}

TEST_CASE("batched component gradients equal one full backward per component") {
  gcr::testing::Rng rng(3);
  GaussianActor actor(3, 2, {5, 4}, 1);
  MiniBatch mb = on_policy_batch(actor, 10, 3, rng);
  for (double& v : mb.old_log_probs) v += std::normal_distribution<double>(0, 0.3)(rng);
  const auto pg = gcr::component_policy_gradients(actor, mb, 0.2);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> adv(10);
    for (std::size_t i = 0; i < 10; ++i) adv[i] = mb.advantages.at(i, c);
    Tape tape;
    const auto p = actor.bind(tape);
    const auto lp = actor.log_prob(tape, p, mb.observations, mb.actions);
    const auto loss = gcr::surrogate_loss(tape, lp, mb.old_log_probs, adv, 0.2);
    CHECK(tape.value(loss)[0] == doctest::Approx(pg.losses[c]).epsilon(1e-14));
    const auto g = actor.layout().flatten(tape.backward(loss, Tensor::scalar(1.0)));
    CHECK(gcr::testing::max_abs_diff(g, pg.gradients[c]) < 1e-13);
  }
}

TEST_CASE("loss gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto e = gcr::testing::loss_gradient_errors(seed);
    CHECK(e.surrogate < 1e-4);
    CHECK(e.value < 1e-4);
  }
}

TEST_CASE("value loss") {
  SUBCASE("perfect critic") {
    Tape tape;
    const Tensor t = Tensor::matrix(2, 2, {1, 2, 3, 4});
    CHECK(tape.value(gcr::value_loss(tape, tape.parameter(t), t))[0] == 0.0);
  }
  SUBCASE("one sample, error two") {
    Tape tape;
    const auto v = tape.parameter(Tensor::matrix(1, 1, {1.0}));
    CHECK(tape.value(gcr::value_loss(tape, v, Tensor::matrix(1, 1, {3.0})))[0] == 2.0);
  }
  SUBCASE("direct summation") {
    gcr::testing::Rng rng(4);
    const Tensor v = gcr::testing::random_tensor({9, 3}, rng);
    const Tensor t = gcr::testing::random_tensor({9, 3}, rng);
    double expected = 0.0;
    for (std::size_t r = 0; r < 9; ++r) {
      for (std::size_t c = 0; c < 3; ++c) expected += (t.at(r, c) - v.at(r, c)) * (t.at(r, c) - v.at(r, c));
    }
    expected = 0.5 * expected / 9.0;
    Tape tape;
    CHECK(tape.value(gcr::value_loss(tape, tape.parameter(v), t))[0] ==
          doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("approximate KL") {
  SUBCASE("identical policies") {
    const std::vector<double> lp = {-1.0, -0.3, -2.5};
    CHECK(gcr::approx_kl(lp, lp) == 0.0);
  }
  SUBCASE("shifted unit Gaussian") {
    gcr::testing::Rng rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double delta : {0.1, 0.3, 0.5}) {
      std::vector<double> old_lp, new_lp;
      for (int i = 0; i < 10000; ++i) {
        const double a = n(rng);  // drawn from the old policy N(0, 1)
        old_lp.push_back(-0.5 * a * a);
        new_lp.push_back(-0.5 * (a - delta) * (a - delta));
      }
      const double kl = gcr::approx_kl(old_lp, new_lp);
      CHECK(kl >= 0.0);
      CHECK(std::abs(kl - 0.5 * delta * delta) < 0.1 * 0.5 * delta * delta);
    }
  }
}

TEST_CASE("non-finite ratios abort with diagnostics") {
  gcr::testing::Rng rng(6);
  GaussianActor actor(2, 1, {3}, 0);
  MiniBatch mb = on_policy_batch(actor, 4, 1, rng);
  mb.old_log_probs[2] = -1e6;
  try {
    gcr::component_policy_gradients(actor, mb, 0.2);
    FAIL("expected a numerical abort");
  } catch (const gcr::NumericalError& e) {
    CHECK(std::string(e.what()).find("KL") != std::string::npos);
  }
}

TEST_CASE("entropy bonus gradient") {
  GaussianActor actor(2, 3, {4}, 0);
  const auto g = gcr::entropy_bonus_gradient(actor, 0.01);
  const auto& entries = actor.layout().entries();
  const auto& ls = entries.back();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool in_log_std = i >= ls.offset;
    CHECK(g[i] == (in_log_std ? -0.01 : 0.0));
  }
}
