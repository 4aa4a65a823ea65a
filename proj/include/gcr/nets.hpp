#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gcr/reward_spec.hpp"
#include "gcr/tape.hpp"
#include "gcr/tensor.hpp"

namespace gcr {

using Rng = std::mt19937_64;

// 0.5 * ln(2*pi*e): entropy of a unit-variance Gaussian dimension.
inline constexpr double kHalfLogTwoPiE = 1.4189385332046727;
inline constexpr double kHalfLogTwoPi = 0.9189385332046727;

// Orthogonal rows/columns scaled by `gain`.
Tensor orthogonal_init(std::size_t rows, std::size_t cols, double gain, Rng& rng);

// Shared storage for a set of named parameter tensors.
class ParameterBlock {
 public:
  const diff::ParameterLayout& layout() const { return layout_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t size() const { return layout_.total_size(); }

  std::vector<double> flat() const { return layout_.flatten(tensors_); }
  void set_flat(std::span<const double> values) { tensors_ = layout_.unflatten(values); }

  // Registers every tensor as a parameter leaf, in layout order.
  std::vector<diff::Var> bind(diff::Tape& tape) const;

 protected:
  void add(std::string name, Tensor value);

 private:
  diff::ParameterLayout layout_;
  std::vector<Tensor> tensors_;
};

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

struct ActionBatch {
  Tensor actions;               // [n, act_dim]
  std::vector<double> log_prob; // [n]
};

// Diagonal Gaussian policy: tanh MLP for the mean, state-independent log-std.
// Parameter order: mean.l<i>.weight, mean.l<i>.bias for each layer, then
// log_std.
class GaussianActor : public ParameterBlock {
 public:
  GaussianActor(std::size_t obs_dim, std::size_t act_dim,
                std::vector<std::size_t> hidden, std::uint64_t seed);

  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t act_dim() const { return act_dim_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  std::span<const double> log_std() const { return tensors().back().values(); }
  std::span<double> log_std() { return tensors().back().values(); }

  // Graph builders over parameters already bound to `tape`.
  diff::Var mean(diff::Tape& tape, std::span<const diff::Var> params,
                 diff::Var obs) const;
  // Per-row log-density, [n].
  diff::Var log_prob(diff::Tape& tape, std::span<const diff::Var> params,
                     const Tensor& obs, const Tensor& actions) const;
  diff::Var entropy(diff::Tape& tape, std::span<const diff::Var> params) const;

  Tensor mean(const Tensor& obs) const;
  std::vector<double> log_prob(const Tensor& obs, const Tensor& actions) const;
  double entropy() const;

  ActionSample sample(std::span<const double> obs, Rng& rng) const;
  // Row r draws its noise from rngs[r].
  ActionBatch sample(const Tensor& obs, std::span<Rng> rngs) const;

 private:
  std::size_t obs_dim_;
  std::size_t act_dim_;
  std::vector<std::size_t> hidden_;
};

// Vector-valued critic: shared tanh trunk followed by K linear heads, head k
// estimating the discounted return of reward component k. The heads are
// stored as one [hidden, K] weight and a [K] bias; column k is head k.
class MultiHeadCritic : public ParameterBlock {
 public:
  MultiHeadCritic(std::size_t obs_dim, std::vector<std::size_t> hidden,
                  const RewardSpec& spec, std::uint64_t seed);

  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t num_heads() const { return num_heads_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }

  // Throws if the head count differs from spec.size().
  void check_spec(const RewardSpec& spec) const;

  // [n, K]
  diff::Var values(diff::Tape& tape, std::span<const diff::Var> params,
                   diff::Var obs) const;
  Tensor values(const Tensor& obs) const;

 private:
  std::size_t obs_dim_;
  std::size_t num_heads_;
  std::vector<std::size_t> hidden_;
};

// Throws NumericalError naming the first non-finite entry.
void require_finite(const Tensor& t, const char* what);

}  // namespace gcr
