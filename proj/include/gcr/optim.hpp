#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gcr {

// Adam with bias correction.
class Adam {
 public:
  explicit Adam(std::size_t dim, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // params -= lr * m_hat / (sqrt(v_hat) + eps)
  void step(std::span<double> params, std::span<const double> grad, double lr);

  std::size_t steps() const { return steps_; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t steps_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

// Rescales `grad` in place so its L2 norm is at most max_norm. Returns the
// norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(std::span<double> grad, double max_norm);

// Learning-rate rule driven by the observed KL: shrink by 1.5 above twice the
// target (floor 1e-6), grow by 1.5 below half the target (cap 1e-2).
double adapt_lr(double lr, double kl, double target_kl);

}  // namespace gcr
