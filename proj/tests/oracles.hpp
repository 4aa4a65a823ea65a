#pragma once

// Reference implementations used to cross-check the library, written
// directly from the defining formulas with no shared code.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace gcr::oracle {

// Segment of one environment, K components, time index first.
struct Segment {
  std::size_t horizon = 0;
  std::size_t k = 0;
  std::vector<std::vector<double>> rewards;      // [T][K]
  std::vector<std::vector<double>> values;       // [T][K]
  std::vector<std::vector<double>> next_values;  // [T][K]
  std::vector<int> dones;
  std::vector<int> timeouts;
};

// A_t = sum_l (gamma lambda)^l prod_{j<l} (1 - d_{t+j})(1 - timeout_{t+j}) delta_{t+l}
inline std::vector<std::vector<double>> gae_by_summation(const Segment& s, double gamma,
                                                         double lambda) {
  std::vector<std::vector<double>> delta(s.horizon, std::vector<double>(s.k));
  for (std::size_t t = 0; t < s.horizon; ++t) {
    for (std::size_t c = 0; c < s.k; ++c) {
      delta[t][c] = s.rewards[t][c] + gamma * (1 - s.dones[t]) * s.next_values[t][c] -
                    s.values[t][c];
    }
  }
  std::vector<std::vector<double>> a(s.horizon, std::vector<double>(s.k, 0.0));
  for (std::size_t c = 0; c < s.k; ++c) {
    for (std::size_t t = 0; t < s.horizon; ++t) {
      double total = 0.0;
      for (std::size_t l = 0; t + l < s.horizon; ++l) {
        double gate = 1.0;
        for (std::size_t j = 0; j < l; ++j) {
          gate *= (1 - s.dones[t + j]) * (1 - s.timeouts[t + j]);
        }
        total += std::pow(gamma * lambda, static_cast<double>(l)) * gate * delta[t + l][c];
      }
      a[t][c] = total;
    }
  }
  return a;
}

// P(X >= k) for X ~ Binomial(n, 1/2) by summing integer binomial coefficients.
inline double sign_test_tail(unsigned n, unsigned k) {
  double total = 0.0;
  for (unsigned i = k; i <= n; ++i) {
    double c = 1.0;
    for (unsigned j = 1; j <= i; ++j) c = c * static_cast<double>(n - i + j) / j;
    total += c;
  }
  return total / std::pow(2.0, n);
}

// Symmetric percent change written out from its definition.
inline double symmetric_percent_change(double a, double b) {
  return (b - a) / ((a + b) / 2.0) * 100.0;
}

}  // namespace gcr::oracle
