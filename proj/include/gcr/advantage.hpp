#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gcr/rollout.hpp"
#include "gcr/tensor.hpp"

namespace gcr {

inline constexpr double kAdvantageEpsilon = 1e-8;

// Per-step inputs to GAE for a num_envs x horizon segment, time-major rows.
struct GaeInputs {
  std::size_t num_envs = 0;
  std::size_t horizon = 0;
  const Tensor* rewards = nullptr;      // [N, K]
  const Tensor* values = nullptr;       // [N, K]
  const Tensor* next_values = nullptr;  // [N, K]
  std::span<const std::uint8_t> dones;
  std::span<const std::uint8_t> timeouts;
};

struct GaeResult {
  Tensor advantages;  // [N, K]
  Tensor targets;     // [N, K], advantages + values
};

// Component-wise GAE with one shared set of episode flags:
//   delta_t = r_t + gamma (1 - d_t) V(s_{t+1}) - V(s_t)
//   A_t = delta_t + gamma lambda (1 - d_t)(1 - timeout_t) A_{t+1}
// A timeout bootstraps from V of its final observation and ends the recursion.
GaeResult gae(const GaeInputs& in, double gamma, double lambda);
GaeResult gae(const TrajectoryBatch& batch, double gamma, double lambda);
// Same, with rewards replaced (e.g. summed for a single-head critic).
GaeResult gae(const TrajectoryBatch& batch, const Tensor& rewards, double gamma,
              double lambda);

struct NormalizedAdvantages {
  Tensor normalized;               // [N, K]
  std::vector<double> mean;        // [K]
  std::vector<double> covariance;  // [K*K], row-major, N-1 divisor
  double total_variance = 0.0;     // 1'C1
  double denominator = 0.0;        // sqrt(1'C1 + eps)
};

// Centres each component by its own mean and divides every component by the
// same scalar sqrt(1'C1 + eps). Throws if fewer than two rows.
NormalizedAdvantages normalize(const Tensor& advantages, double eps = kAdvantageEpsilon);

struct AdvantageBlock {
  Tensor raw;
  Tensor targets;
  NormalizedAdvantages norm;
};

}  // namespace gcr
