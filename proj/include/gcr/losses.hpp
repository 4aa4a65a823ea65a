#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcr/nets.hpp"
#include "gcr/rollout.hpp"
#include "gcr/tape.hpp"
#include "gcr/tensor.hpp"

namespace gcr {

inline constexpr double kDefaultClip = 0.2;

// Rows of a collected batch selected for one optimizer step.
struct MiniBatch {
  Tensor observations;               // [n, obs_dim]
  Tensor actions;                    // [n, act_dim]
  std::vector<double> old_log_probs; // [n]
  Tensor advantages;                 // [n, K], normalized
  Tensor targets;                    // [n, H], value targets

  std::size_t size() const { return old_log_probs.size(); }
};

MiniBatch gather_minibatch(const TrajectoryBatch& batch, const Tensor& advantages,
                           const Tensor& targets, std::span<const std::size_t> rows);

// -mean_t min(rho_t A_t, clip(rho_t, 1-clip, 1+clip) A_t) with
// rho_t = exp(log_prob_t - old_log_prob_t). `log_prob` is an [n] node.
diff::Var surrogate_loss(diff::Tape& tape, diff::Var log_prob,
                         std::span<const double> old_log_probs,
                         std::span<const double> advantages, double clip);

// 0.5 * mean_t sum_k (target - V)^2 over an [n, H] value node.
diff::Var value_loss(diff::Tape& tape, diff::Var values, const Tensor& targets);

// k3 estimator of KL(old || new): mean(log old - log new) + mean(rho - 1).
double approx_kl(std::span<const double> old_log_probs, std::span<const double> new_log_probs);

struct PolicyGradients {
  std::vector<double> losses;                // L^(k), K entries
  std::vector<std::vector<double>> gradients;  // flat dL^(k)/dtheta in layout order
  double mean_ratio = 1.0;
  double approx_kl = 0.0;  // of the parameters the gradients were taken at
};

// One actor forward over the mini-batch; the K surrogate gradients are pulled
// back through d L^(k) / d log_prob with a single shared reverse sweep.
// Throws NumericalError if any ratio is non-finite.
PolicyGradients component_policy_gradients(const GaussianActor& actor, const MiniBatch& mb,
                                           double clip);

// Flat gradient of -coef * entropy.
std::vector<double> entropy_bonus_gradient(const GaussianActor& actor, double coef);

struct ValueGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // flat, critic layout order
};

ValueGradient value_loss_gradient(const MultiHeadCritic& critic, const Tensor& observations,
                                  const Tensor& targets);

}  // namespace gcr
