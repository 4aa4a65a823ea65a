#include "gcr/gradres.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gcr {

namespace {

Eigen::Map<const Eigen::VectorXd> view(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

Eigen::Map<Eigen::VectorXd> view(std::span<double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

double norm(std::span<const double> v) { return view(v).norm(); }

std::vector<std::size_t> shuffled(std::vector<std::size_t> idx, Rng& rng) {
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

// Symmetric PCGrad over the vectors in `work` selected by `group`. Each member
// is projected, in random partner order, against every partner it conflicts
// with. `work` holds the phase inputs on entry and outputs on exit.
void symmetric_pass(std::vector<std::vector<double>>& work,
                    const std::vector<std::size_t>& group, SymmetricReference reference,
                    ProjectionTrace::Phase phase, Rng& rng, ConflictStats& stats,
                    ProjectionTrace* trace) {
  if (group.size() < 2) return;
  const std::size_t k = stats.num_components;
  std::vector<std::vector<double>> original;
  if (reference == SymmetricReference::kOriginal) {
    original.reserve(group.size());
    for (std::size_t g : group) original.push_back(work[g]);
  }
  std::vector<std::vector<double>> out;
  if (reference == SymmetricReference::kOriginal) out = original;

  std::vector<std::size_t> positions(group.size());
  std::iota(positions.begin(), positions.end(), 0);
  for (std::size_t a : shuffled(positions, rng)) {
    std::vector<std::size_t> partners;
    for (std::size_t b = 0; b < group.size(); ++b) {
      if (b != a) partners.push_back(b);
    }
    std::span<double> gi = reference == SymmetricReference::kOriginal
                               ? std::span<double>(out[a])
                               : std::span<double>(work[group[a]]);
    for (std::size_t b : shuffled(partners, rng)) {
      std::span<const double> gj = reference == SymmetricReference::kOriginal
                                       ? std::span<const double>(original[b])
                                       : std::span<const double>(work[group[b]]);
      if (dot(gi, gj) >= 0.0) continue;
      const double before = trace ? norm(gi) : 0.0;
      const double removed = project(gi, gj);
      stats.projection_magnitude[group[a] * k + group[b]] += removed;
      ++stats.num_projections;
      if (trace) {
        trace->steps.push_back({phase, group[a], group[b], dot(gi, gj), before, norm(gi), norm(gj)});
      }
    }
  }
  if (reference == SymmetricReference::kOriginal) {
    for (std::size_t a = 0; a < group.size(); ++a) work[group[a]] = std::move(out[a]);
  }
}

}  // namespace

void GradientSet::validate() const {
  if (gradients.empty()) throw std::invalid_argument("gradient set is empty");
  if (kinds.size() != gradients.size()) {
    throw std::invalid_argument("gradient set: " + std::to_string(kinds.size()) + " labels for " +
                                std::to_string(gradients.size()) + " gradients");
  }
  for (const auto& g : gradients) {
    if (g.size() != gradients.front().size()) {
      throw std::invalid_argument("gradient set: vectors differ in length");
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return view(a).dot(view(b));
}

double project(std::span<double> gi, std::span<const double> gj) {
  const double jj = dot(gj, gj);
  if (jj == 0.0) return 0.0;
  const double coef = dot(gi, gj) / jj;
  view(gi) -= coef * view(gj);
  return std::abs(coef) * std::sqrt(jj);
}

ConflictStats detect_conflicts(const GradientSet& gs) {
  gs.validate();
  const std::size_t k = gs.size();
  ConflictStats s;
  s.num_components = k;
  s.cosine.assign(k * k, 0.0);
  s.projection_magnitude.assign(k * k, 0.0);
  std::vector<double> norms(k);
  for (std::size_t i = 0; i < k; ++i) norms[i] = norm(gs.gradients[i]);
  for (std::size_t i = 0; i < k; ++i) {
    if (norms[i] > 0.0) s.cosine[i * k + i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = dot(gs.gradients[i], gs.gradients[j]);
      if (d < 0.0) ++s.conflict_count;
      const double c = norms[i] > 0.0 && norms[j] > 0.0 ? d / (norms[i] * norms[j]) : 0.0;
      s.cosine[i * k + j] = c;
      s.cosine[j * k + i] = c;
    }
  }
  return s;
}

std::vector<double> sum_gradients(const GradientSet& gs) {
  gs.validate();
  std::vector<double> total(gs.dim(), 0.0);
  for (const auto& g : gs.gradients) view(std::span<double>(total)) += view(g);
  return total;
}

ResolveResult resolve(const GradientSet& gs, Rng& rng, const ResolveOptions& options,
                      ProjectionTrace* trace) {
  ResolveResult out;
  out.stats = detect_conflicts(gs);
  const std::size_t k = gs.size();
  out.projected = gs.gradients;
  auto& work = out.projected;

  if (!options.use_priority) {
    std::vector<std::size_t> all(k);
    std::iota(all.begin(), all.end(), 0);
    symmetric_pass(work, all, options.reference, ProjectionTrace::Phase::kAll, rng, out.stats,
                   trace);
  } else {
    std::vector<std::size_t> tasks;
    std::vector<std::size_t> regs;
    for (std::size_t i = 0; i < k; ++i) {
      (gs.kinds[i] == ComponentKind::kTask ? tasks : regs).push_back(i);
    }
    // Regularisers yield to tasks; the task vectors are read, never written.
    for (std::size_t r : shuffled(regs, rng)) {
      for (std::size_t t : shuffled(tasks, rng)) {
        const auto& gt = gs.gradients[t];
        if (dot(work[r], gt) >= 0.0) continue;
        const double before = trace ? norm(work[r]) : 0.0;
        out.stats.projection_magnitude[r * k + t] += project(work[r], gt);
        ++out.stats.num_projections;
        if (trace) {
          trace->steps.push_back({ProjectionTrace::Phase::kPriority, r, t, dot(work[r], gt),
                                  before, norm(work[r]), norm(gt)});
        }
      }
    }
    if (trace) trace->after_priority_phase = work;
    symmetric_pass(work, tasks, options.reference, ProjectionTrace::Phase::kTaskTask, rng,
                   out.stats, trace);
    symmetric_pass(work, regs, options.reference, ProjectionTrace::Phase::kRegulariserPair, rng,
                   out.stats, trace);
  }

  out.final_gradient.assign(gs.dim(), 0.0);
  for (const auto& g : work) view(std::span<double>(out.final_gradient)) += view(g);
  return out;
}

}  // namespace gcr
