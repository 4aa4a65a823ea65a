#include "gcr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gcr/errors.hpp"

namespace gcr {

MiniBatch gather_minibatch(const TrajectoryBatch& batch, const Tensor& advantages,
                           const Tensor& targets, std::span<const std::size_t> rows) {
  const std::size_t n = rows.size();
  if (n == 0) throw std::invalid_argument("minibatch: no rows selected");
  const std::size_t od = batch.observations.cols();
  const std::size_t ad = batch.actions.cols();
  const std::size_t k = advantages.cols();
  const std::size_t h = targets.cols();
  MiniBatch mb;
  mb.observations = Tensor({n, od});
  mb.actions = Tensor({n, ad});
  mb.old_log_probs.resize(n);
  mb.advantages = Tensor({n, k});
  mb.targets = Tensor({n, h});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = rows[i];
    if (r >= batch.size()) throw std::out_of_range("minibatch: row index out of range");
    std::copy_n(batch.observations.values().begin() + r * od, od,
                mb.observations.values().begin() + i * od);
    std::copy_n(batch.actions.values().begin() + r * ad, ad,
                mb.actions.values().begin() + i * ad);
    mb.old_log_probs[i] = batch.log_probs[r];
    std::copy_n(advantages.values().begin() + r * k, k, mb.advantages.values().begin() + i * k);
    std::copy_n(targets.values().begin() + r * h, h, mb.targets.values().begin() + i * h);
  }
  return mb;
}

diff::Var surrogate_loss(diff::Tape& tape, diff::Var log_prob,
                         std::span<const double> old_log_probs,
                         std::span<const double> advantages, double clip) {
  const std::size_t n = old_log_probs.size();
  if (advantages.size() != n) {
    throw std::invalid_argument("surrogate: advantage and log-prob lengths differ");
  }
  const diff::Var old = tape.constant(Tensor({n}, {old_log_probs.begin(), old_log_probs.end()}));
  const diff::Var adv = tape.constant(Tensor({n}, {advantages.begin(), advantages.end()}));
  const diff::Var ratio = tape.exp(tape.sub(log_prob, old));
  const diff::Var unclipped = tape.mul(ratio, adv);
  const diff::Var clipped = tape.mul(tape.clamp(ratio, 1.0 - clip, 1.0 + clip), adv);
  return tape.scale(tape.mean(tape.min(unclipped, clipped)), -1.0);
}

diff::Var value_loss(diff::Tape& tape, diff::Var values, const Tensor& targets) {
  const diff::Var err = tape.sub(tape.constant(targets), values);
  return tape.scale(tape.mean(tape.sum_rows(tape.square(err))), 0.5);
}

double approx_kl(std::span<const double> old_log_probs, std::span<const double> new_log_probs) {
  if (old_log_probs.size() != new_log_probs.size() || old_log_probs.empty()) {
    throw std::invalid_argument("approx_kl: log-prob lists must be non-empty and equal length");
  }
  double log_term = 0.0;
  double ratio_term = 0.0;
  for (std::size_t i = 0; i < old_log_probs.size(); ++i) {
    const double d = new_log_probs[i] - old_log_probs[i];
    log_term -= d;
    ratio_term += std::expm1(d);
  }
  const double n = static_cast<double>(old_log_probs.size());
  return log_term / n + ratio_term / n;
}

PolicyGradients component_policy_gradients(const GaussianActor& actor, const MiniBatch& mb,
                                           double clip) {
  const std::size_t n = mb.size();
  const std::size_t k = mb.advantages.cols();

  diff::Tape tape;
  const auto params = actor.bind(tape);
  const diff::Var logp = actor.log_prob(tape, params, mb.observations, mb.actions);
  const Tensor& logp_value = tape.value(logp);

  PolicyGradients out;
  out.approx_kl = approx_kl(mb.old_log_probs, logp_value.values());
  double ratio_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = std::exp(logp_value[i] - mb.old_log_probs[i]);
    if (!std::isfinite(rho)) {
      std::ostringstream msg;
      msg << "surrogate: non-finite probability ratio at row " << i << " (log-prob "
          << logp_value[i] << ", behaviour " << mb.old_log_probs[i]
          << ", approx KL " << out.approx_kl << ")";
      throw NumericalError(msg.str());
    }
    ratio_sum += rho;
  }
  out.mean_ratio = ratio_sum / static_cast<double>(n);

  // dL^(k)/dlog_prob for every component, from a small tape per component.
  Tensor weights({n, k});
  std::vector<double> adv(n);
  out.losses.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i) adv[i] = mb.advantages.at(i, c);
    diff::Tape head;
    const diff::Var lp = head.parameter(logp_value);
    const diff::Var loss = surrogate_loss(head, lp, mb.old_log_probs, adv, clip);
    out.losses[c] = head.value(loss)[0];
    const Tensor u = head.backward(loss, Tensor::scalar(1.0)).front();
    for (std::size_t i = 0; i < n; ++i) weights.at(i, c) = u[i];
  }

  const auto per_component = tape.backward_rowwise(logp, weights);
  out.gradients.reserve(k);
  for (const auto& g : per_component) out.gradients.push_back(actor.layout().flatten(g));
  return out;
}

std::vector<double> entropy_bonus_gradient(const GaussianActor& actor, double coef) {
  diff::Tape tape;
  const auto params = actor.bind(tape);
  const diff::Var h = actor.entropy(tape, params);
  return actor.layout().flatten(tape.backward(h, Tensor::scalar(-coef)));
}

ValueGradient value_loss_gradient(const MultiHeadCritic& critic, const Tensor& observations,
                                  const Tensor& targets) {
  require_finite(observations, "critic observation");
  diff::Tape tape;
  const auto params = critic.bind(tape);
  const diff::Var v = critic.values(tape, params, tape.constant(observations));
  if (!tape.value(v).same_shape(targets)) {
    throw std::invalid_argument("value_loss: targets " + targets.shape_string() +
                                " do not match critic output " + tape.value(v).shape_string());
  }
  const diff::Var loss = value_loss(tape, v, targets);
  ValueGradient out;
  out.loss = tape.value(loss)[0];
  out.gradient = critic.layout().flatten(tape.backward(loss, Tensor::scalar(1.0)));
  return out;
}

}  // namespace gcr
