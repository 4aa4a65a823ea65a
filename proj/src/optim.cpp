#include "gcr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gcr {

namespace {
constexpr double kLrFactor = 1.5;
constexpr double kLrMin = 1e-6;
constexpr double kLrMax = 1e-2;
}  // namespace

Adam::Adam(std::size_t dim, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(dim, 0.0), v_(dim, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("adam: parameter/gradient size does not match optimizer state");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

double adapt_lr(double lr, double kl, double target_kl) {
  if (!(lr > 0.0)) throw std::invalid_argument("adapt_lr: learning rate must be positive");
  if (kl > 2.0 * target_kl) return std::max(lr / kLrFactor, kLrMin);
  if (kl < 0.5 * target_kl) return std::min(lr * kLrFactor, kLrMax);
  return lr;
}

}  // namespace gcr
