#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcr/nets.hpp"
#include "gcr/reward_spec.hpp"

namespace gcr {

// K flat actor gradients with their priority labels, in RewardSpec order.
struct GradientSet {
  std::vector<std::vector<double>> gradients;
  std::vector<ComponentKind> kinds;

  std::size_t size() const { return gradients.size(); }
  std::size_t dim() const { return gradients.empty() ? 0 : gradients.front().size(); }
  // Throws on ragged vectors or a label count mismatch.
  void validate() const;
};

struct ConflictStats {
  std::size_t num_components = 0;
  std::vector<double> cosine;  // [K*K]; 0 against a zero vector
  std::size_t conflict_count = 0;  // unordered pairs with negative inner product
  // Norm of the component removed from i by projections onto j, summed.
  std::vector<double> projection_magnitude;  // [K*K]
  std::size_t num_projections = 0;

  double cos(std::size_t i, std::size_t j) const { return cosine[i * num_components + j]; }
};

ConflictStats detect_conflicts(const GradientSet& gs);

double dot(std::span<const double> a, std::span<const double> b);

// gi <- gi - (gi.gj / |gj|^2) gj. No-op for a zero gj. Returns the norm of
// the removed component.
double project(std::span<double> gi, std::span<const double> gj);

enum class SymmetricReference {
  kOriginal,  // project against the phase inputs (published PCGrad)
  kRunning,   // project against the partner's already-modified vector
};

struct ResolveOptions {
  bool use_priority = true;  // false treats every pair symmetrically
  SymmetricReference reference = SymmetricReference::kOriginal;
};

// Record of every projection, for invariant checks.
struct ProjectionTrace {
  enum class Phase { kPriority, kTaskTask, kRegulariserPair, kAll };
  struct Step {
    Phase phase;
    std::size_t i = 0;
    std::size_t j = 0;
    double dot_after = 0.0;  // projected gi . reference gj
    double norm_before = 0.0;
    double norm_after = 0.0;
    double norm_reference = 0.0;
  };
  std::vector<Step> steps;
  // Working vectors right after the regulariser-onto-task phase.
  std::vector<std::vector<double>> after_priority_phase;
};

struct ResolveResult {
  std::vector<double> final_gradient;
  std::vector<std::vector<double>> projected;
  ConflictStats stats;  // measured on the original gradients
};

// Priority-aware resolution. With priority: (a) each regulariser, in random
// order, is projected against every task it currently conflicts with (tasks
// in random order); (b) symmetric PCGrad among tasks; (c) symmetric PCGrad
// among the regulariser outputs of (a). Without priority all K vectors go
// through one symmetric pass. The result is the sum of the projected vectors.
ResolveResult resolve(const GradientSet& gs, Rng& rng, const ResolveOptions& options = {},
                      ProjectionTrace* trace = nullptr);

// Sum without projection.
std::vector<double> sum_gradients(const GradientSet& gs);

}  // namespace gcr
