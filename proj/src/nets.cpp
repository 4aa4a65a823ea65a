#include "gcr/nets.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "gcr/errors.hpp"

namespace gcr {

namespace {

constexpr double kHiddenGain = 1.0;
constexpr double kActorOutputGain = 0.01;
constexpr double kCriticOutputGain = 1.0;

diff::Var mlp(diff::Tape& tape, std::span<const diff::Var> params,
              std::size_t num_layers, diff::Var input) {
  diff::Var h = input;
  for (std::size_t l = 0; l < num_layers; ++l) {
    h = tape.add_bias(tape.matmul(h, params[2 * l]), params[2 * l + 1]);
    if (l + 1 < num_layers) h = tape.tanh(h);
  }
  return h;
}

}  // namespace

Tensor orthogonal_init(std::size_t rows, std::size_t cols, double gain, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t big = std::max(rows, cols);
  const std::size_t small = std::min(rows, cols);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(big), static_cast<Eigen::Index>(small));
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) a(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    if (r(c, c) < 0) q.col(c) *= -1.0;
  }
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = rows >= cols ? q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                                    : q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      out.at(i, j) = gain * v;
    }
  }
  return out;
}

void require_finite(const Tensor& t, const char* what) {
  const auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw NumericalError(std::string(what) + ": non-finite value " +
                           std::to_string(v[i]) + " at flat index " + std::to_string(i));
    }
  }
}

std::vector<diff::Var> ParameterBlock::bind(diff::Tape& tape) const {
  std::vector<diff::Var> vars;
  vars.reserve(tensors_.size());
  for (const auto& t : tensors_) vars.push_back(tape.parameter(t));
  return vars;
}

void ParameterBlock::add(std::string name, Tensor value) {
  layout_.add(std::move(name), value.shape());
  tensors_.push_back(std::move(value));
}

GaussianActor::GaussianActor(std::size_t obs_dim, std::size_t act_dim,
                             std::vector<std::size_t> hidden, std::uint64_t seed)
    : obs_dim_(obs_dim), act_dim_(act_dim), hidden_(std::move(hidden)) {
  if (obs_dim_ == 0 || act_dim_ == 0) {
    throw std::invalid_argument("actor: observation and action dims must be positive");
  }
  Rng rng(seed);
  std::size_t in = obs_dim_;
  for (std::size_t l = 0; l <= hidden_.size(); ++l) {
    const bool last = l == hidden_.size();
    const std::size_t out = last ? act_dim_ : hidden_[l];
    const std::string prefix = "mean.l" + std::to_string(l);
    add(prefix + ".weight",
        orthogonal_init(in, out, last ? kActorOutputGain : kHiddenGain, rng));
    add(prefix + ".bias", Tensor({out}, 0.0));
    in = out;
  }
  add("log_std", Tensor({act_dim_}, 0.0));
}

diff::Var GaussianActor::mean(diff::Tape& tape, std::span<const diff::Var> params,
                              diff::Var obs) const {
  return mlp(tape, params, hidden_.size() + 1, obs);
}

diff::Var GaussianActor::log_prob(diff::Tape& tape, std::span<const diff::Var> params,
                                  const Tensor& obs, const Tensor& actions) const {
  require_finite(obs, "actor_logprob observation");
  if (obs.rank() != 2 || obs.cols() != obs_dim_ || actions.rank() != 2 ||
      actions.cols() != act_dim_ || actions.rows() != obs.rows()) {
    throw std::invalid_argument("actor_logprob: expected obs [n," + std::to_string(obs_dim_) +
                                "] and actions [n," + std::to_string(act_dim_) + "], got " +
                                obs.shape_string() + " and " + actions.shape_string());
  }
  const diff::Var mu = mean(tape, params, tape.constant(obs));
  const diff::Var ls = params.back();
  // log N(a; mu, sigma) = -0.5 |(a - mu) / sigma|^2 - sum(log sigma) - D/2 ln(2 pi)
  const diff::Var zeros = tape.constant(Tensor({obs.rows(), act_dim_}, 0.0));
  const diff::Var ls_rows = tape.add_bias(zeros, ls);
  const diff::Var inv_std = tape.exp(tape.scale(ls_rows, -1.0));
  const diff::Var z = tape.mul(tape.sub(tape.constant(actions), mu), inv_std);
  const diff::Var quad = tape.scale(tape.sum_rows(tape.square(z)), -0.5);
  const diff::Var log_norm = tape.scale(tape.sum_rows(ls_rows), -1.0);
  return tape.add_constant(tape.add(quad, log_norm),
                           -kHalfLogTwoPi * static_cast<double>(act_dim_));
}

diff::Var GaussianActor::entropy(diff::Tape& tape,
                                 std::span<const diff::Var> params) const {
  return tape.add_constant(tape.sum(params.back()),
                           kHalfLogTwoPiE * static_cast<double>(act_dim_));
}

Tensor GaussianActor::mean(const Tensor& obs) const {
  require_finite(obs, "actor observation");
  diff::Tape tape;
  const auto p = bind(tape);
  return tape.value(mean(tape, p, tape.constant(obs)));
}

std::vector<double> GaussianActor::log_prob(const Tensor& obs, const Tensor& actions) const {
  diff::Tape tape;
  const auto p = bind(tape);
  return tape.value(log_prob(tape, p, obs, actions)).storage();
}

double GaussianActor::entropy() const {
  double h = 0.0;
  for (double ls : log_std()) h += kHalfLogTwoPiE + ls;
  return h;
}

ActionSample GaussianActor::sample(std::span<const double> obs, Rng& rng) const {
  Tensor o({1, obs_dim_}, std::vector<double>(obs.begin(), obs.end()));
  ActionBatch b = sample(o, std::span<Rng>(&rng, 1));
  return ActionSample{b.actions.storage(), b.log_prob[0]};
}

ActionBatch GaussianActor::sample(const Tensor& obs, std::span<Rng> rngs) const {
  if (rngs.size() != obs.rows()) {
    throw std::invalid_argument("actor_sample: one rng per observation row required");
  }
  const Tensor mu = mean(obs);
  const auto ls = log_std();
  Tensor actions(mu.shape());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = 0; r < obs.rows(); ++r) {
    for (std::size_t d = 0; d < act_dim_; ++d) {
      actions.at(r, d) = mu.at(r, d) + std::exp(ls[d]) * normal(rngs[r]);
    }
    normal.reset();
  }
  ActionBatch out;
  out.log_prob = log_prob(obs, actions);
  out.actions = std::move(actions);
  return out;
}

MultiHeadCritic::MultiHeadCritic(std::size_t obs_dim, std::vector<std::size_t> hidden,
                                 const RewardSpec& spec, std::uint64_t seed)
    : obs_dim_(obs_dim), num_heads_(spec.size()), hidden_(std::move(hidden)) {
  if (obs_dim_ == 0) throw std::invalid_argument("critic: observation dim must be positive");
  Rng rng(seed);
  std::size_t in = obs_dim_;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    const std::string prefix = "trunk.l" + std::to_string(l);
    add(prefix + ".weight", orthogonal_init(in, hidden_[l], kHiddenGain, rng));
    add(prefix + ".bias", Tensor({hidden_[l]}, 0.0));
    in = hidden_[l];
  }
  add("heads.weight", orthogonal_init(in, num_heads_, kCriticOutputGain, rng));
  add("heads.bias", Tensor({num_heads_}, 0.0));
}

void MultiHeadCritic::check_spec(const RewardSpec& spec) const {
  if (spec.size() != num_heads_) {
    throw std::invalid_argument("critic has " + std::to_string(num_heads_) +
                                " heads but the reward spec declares " +
                                std::to_string(spec.size()) + " components");
  }
}

diff::Var MultiHeadCritic::values(diff::Tape& tape, std::span<const diff::Var> params,
                                  diff::Var obs) const {
  return mlp(tape, params, hidden_.size() + 1, obs);
}

Tensor MultiHeadCritic::values(const Tensor& obs) const {
  require_finite(obs, "critic observation");
  diff::Tape tape;
  const auto p = bind(tape);
  return tape.value(values(tape, p, tape.constant(obs)));
}

}  // namespace gcr
