#include "gcr/advantage.hpp"

#include <cmath>
#include <stdexcept>

namespace gcr {

GaeResult gae(const GaeInputs& in, double gamma, double lambda) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gae: gamma must be in (0, 1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("gae: lambda must be in [0, 1]");
  if (!in.rewards || !in.values || !in.next_values) {
    throw std::invalid_argument("gae: rewards, values and next_values are required");
  }
  const std::size_t n = in.num_envs * in.horizon;
  const std::size_t k = in.rewards->cols();
  if (n == 0 || in.rewards->rows() != n || in.values->rows() != n ||
      in.next_values->rows() != n || in.values->cols() != k || in.next_values->cols() != k ||
      in.dones.size() != n || in.timeouts.size() != n) {
    throw std::invalid_argument("gae: inconsistent segment shapes (rewards " +
                                in.rewards->shape_string() + ", values " +
                                in.values->shape_string() + ")");
  }

  GaeResult out{Tensor({n, k}), Tensor({n, k})};
  std::vector<double> carry(k);
  for (std::size_t e = 0; e < in.num_envs; ++e) {
    std::fill(carry.begin(), carry.end(), 0.0);
    for (std::size_t t = in.horizon; t-- > 0;) {
      const std::size_t row = t * in.num_envs + e;
      const double live = in.dones[row] ? 0.0 : 1.0;
      const double cont = in.dones[row] || in.timeouts[row] ? 0.0 : 1.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double v = in.values->at(row, c);
        const double delta = in.rewards->at(row, c) + gamma * live * in.next_values->at(row, c) - v;
        carry[c] = delta + gamma * lambda * cont * carry[c];
        out.advantages.at(row, c) = carry[c];
        out.targets.at(row, c) = carry[c] + v;
      }
    }
  }
  return out;
}

GaeResult gae(const TrajectoryBatch& batch, const Tensor& rewards, double gamma,
              double lambda) {
  GaeInputs in;
  in.num_envs = batch.num_envs;
  in.horizon = batch.horizon;
  in.rewards = &rewards;
  in.values = &batch.values;
  in.next_values = &batch.next_values;
  in.dones = batch.dones;
  in.timeouts = batch.timeouts;
  return gae(in, gamma, lambda);
}

GaeResult gae(const TrajectoryBatch& batch, double gamma, double lambda) {
  return gae(batch, batch.rewards, gamma, lambda);
}

NormalizedAdvantages normalize(const Tensor& advantages, double eps) {
  const std::size_t n = advantages.rows();
  if (advantages.rank() != 2 || n < 2) {
    throw std::invalid_argument("normalize: need a [N, K] advantage matrix with N >= 2, got " +
                                advantages.shape_string());
  }
  if (!(eps > 0.0)) throw std::invalid_argument("normalize: eps must be positive");
  const std::size_t k = advantages.cols();

  NormalizedAdvantages out;
  out.mean.assign(k, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) out.mean[c] += advantages.at(r, c);
  }
  for (double& m : out.mean) m /= static_cast<double>(n);

  out.covariance.assign(k * k, 0.0);
  std::vector<double> centred(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) centred[c] = advantages.at(r, c) - out.mean[c];
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) out.covariance[i * k + j] += centred[i] * centred[j];
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      out.covariance[i * k + j] /= static_cast<double>(n - 1);
      out.covariance[j * k + i] = out.covariance[i * k + j];
    }
  }
  double total = 0.0;
  for (double c : out.covariance) total += c;
  // Rounding can push 1'C1 of a cancelling pair slightly below zero.
  out.total_variance = std::max(total, 0.0);
  out.denominator = std::sqrt(out.total_variance + eps);

  const double scale = 1.0 / out.denominator;
  out.normalized = Tensor({n, k});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      out.normalized.at(r, c) = (advantages.at(r, c) - out.mean[c]) * scale;
    }
  }
  return out;
}

}  // namespace gcr
