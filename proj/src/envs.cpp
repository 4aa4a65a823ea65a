#include "gcr/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gcr/errors.hpp"

namespace gcr {

namespace {

constexpr double kMinHeadingSpeed = 0.05;
constexpr double kResetSpread = 0.5;

RewardSpec build_spec(const EnvConfig& c) {
  std::vector<RewardComponent> comps;
  if (c.name == kEnvConflict) {
    comps.push_back({"plus_x_velocity", ComponentKind::kTask, c.task_scale});
    comps.push_back({"minus_x_velocity", ComponentKind::kTask, c.task_scale});
  } else {
    comps.push_back({"goal_velocity", ComponentKind::kTask, c.task_scale});
  }
  if (c.name == kEnvStyled) {
    for (const auto& b : c.bands) {
      comps.push_back({"band_" + std::string(to_string(b.quantity)), ComponentKind::kTask,
                       c.band_bonus});
    }
  }
  if (c.with_regulariser) {
    comps.push_back({"action_penalty", ComponentKind::kRegulariser, -c.penalty_scale});
  }
  return RewardSpec(std::move(comps));
}

}  // namespace

std::vector<std::string> env_names() {
  return {std::string(kEnvAligned), std::string(kEnvStyled), std::string(kEnvConflict)};
}

std::string_view to_string(BandQuantity q) {
  switch (q) {
    case BandQuantity::kSpeed: return "speed";
    case BandQuantity::kHeading: return "heading";
    case BandQuantity::kHeight: return "height";
    case BandQuantity::kEnergy: return "energy";
  }
  return "unknown";
}

BandQuantity parse_band_quantity(std::string_view text) {
  for (BandQuantity q : kAllBandQuantities) {
    if (to_string(q) == text) return q;
  }
  throw std::invalid_argument("unknown band quantity '" + std::string(text) +
                              "' (expected speed, heading, height or energy)");
}

std::array<double, kNumBandLevels + 1> band_edges(BandQuantity q) {
  constexpr double pi = std::numbers::pi;
  switch (q) {
    case BandQuantity::kSpeed: return {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    case BandQuantity::kHeading: return {-pi, -0.6 * pi, -0.2 * pi, 0.2 * pi, 0.6 * pi, pi};
    case BandQuantity::kHeight: return {-2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
    case BandQuantity::kEnergy: return {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  }
  throw std::invalid_argument("band_edges: unknown quantity");
}

std::vector<BandSelection> default_feasible_bands() {
  return {{BandQuantity::kSpeed, 1},
          {BandQuantity::kHeading, 2},
          {BandQuantity::kHeight, 2},
          {BandQuantity::kEnergy, 0}};
}

double BandObjective::measure(BandQuantity q, const EnvState& s,
                              std::span<const double> action) {
  const double speed = std::hypot(s.velocity[0], s.velocity[1]);
  switch (q) {
    case BandQuantity::kSpeed:
      return speed;
    case BandQuantity::kHeading: {
      if (speed < kMinHeadingSpeed) return std::nan("");
      double h = std::atan2(s.velocity[1], s.velocity[0]);
      if (h >= std::numbers::pi) h -= 2.0 * std::numbers::pi;
      return h;
    }
    case BandQuantity::kHeight:
      return s.position[1];
    case BandQuantity::kEnergy: {
      // Half squared action norm, in [0, 1] for clipped actions; the top
      // edge is folded into the last range.
      const double e = 0.5 * (action[0] * action[0] + action[1] * action[1]);
      return std::min(e, std::nextafter(1.0, 0.0));
    }
  }
  return std::nan("");
}

bool BandObjective::satisfied(const EnvState& state, std::span<const double> action) const {
  const double m = measure(quantity, state, action);
  return m >= lo && m < hi;
}

double BandObjective::reward(const EnvState& state, std::span<const double> action) const {
  return satisfied(state, action) ? bonus : 0.0;
}

PointMassEnv::PointMassEnv(EnvConfig config, std::uint64_t seed)
    : config_(std::move(config)), spec_(build_spec(config_)), rng_(seed) {
  if (config_.episode_steps <= 0) {
    throw std::invalid_argument("env: episode_steps must be positive");
  }
  if (config_.band_bonus < 0.0) throw std::invalid_argument("env: band bonus must be >= 0");
  if (config_.name == kEnvConflict) {
    terms_.push_back({Term::kPlusX});
    terms_.push_back({Term::kMinusX});
  } else {
    terms_.push_back({Term::kGoalVelocity});
  }
  if (config_.name == kEnvStyled) {
    for (const auto& sel : config_.bands) {
      if (sel.level < 0 || sel.level >= kNumBandLevels) {
        throw std::invalid_argument("env: band level must be in 0..4");
      }
      const auto edges = band_edges(sel.quantity);
      terms_.push_back({Term::kBand, bands_.size()});
      bands_.push_back({sel.quantity, edges[static_cast<std::size_t>(sel.level)],
                        edges[static_cast<std::size_t>(sel.level) + 1], config_.band_bonus});
    }
  } else if (!config_.bands.empty()) {
    throw std::invalid_argument("env: band objectives are only supported by " +
                                std::string(kEnvStyled));
  }
  if (config_.with_regulariser) terms_.push_back({Term::kActionPenalty});
}

std::vector<double> PointMassEnv::observation() const {
  return {(state_.position[0] - kGoal[0]) / kGoal[0], (state_.position[1] - kGoal[1]) / kGoal[0],
          state_.velocity[0], state_.velocity[1]};
}

std::vector<double> PointMassEnv::reset() {
  std::uniform_real_distribution<double> u(-kResetSpread, kResetSpread);
  EnvState s;
  s.position = {u(rng_), u(rng_)};
  return reset_to(s);
}

std::vector<double> PointMassEnv::reset_to(const EnvState& state) {
  state_ = state;
  finished_ = false;
  return observation();
}

StepResult PointMassEnv::step(std::span<const double> action) {
  if (finished_) throw std::logic_error("env: step called on a finished episode; reset first");
  if (action.size() != kActDim) throw std::invalid_argument("env: action must have 2 entries");
  std::array<double, 2> a{};
  for (std::size_t d = 0; d < kActDim; ++d) {
    if (!std::isfinite(action[d])) throw NumericalError("env: non-finite action");
    a[d] = std::clamp(action[d], -1.0, 1.0);
  }

  const std::array<double, 2> to_goal = {kGoal[0] - state_.position[0],
                                         kGoal[1] - state_.position[1]};
  const double dist = std::hypot(to_goal[0], to_goal[1]);

  EnvState next = state_;
  for (std::size_t d = 0; d < 2; ++d) {
    next.velocity[d] = (state_.velocity[d] + a[d] * kDt) * (1.0 - kDamping);
    next.position[d] = state_.position[d] + next.velocity[d] * kDt;
  }
  next.step = state_.step + 1;

  StepResult out;
  out.reward.reserve(terms_.size());
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    double raw = 0.0;
    switch (terms_[k].term) {
      case Term::kGoalVelocity:
        raw = dist > 0.0 ? (next.velocity[0] * to_goal[0] + next.velocity[1] * to_goal[1]) / dist
                         : 0.0;
        break;
      case Term::kPlusX:
        raw = next.velocity[0];
        break;
      case Term::kMinusX:
        raw = -next.velocity[0];
        break;
      case Term::kBand:
        raw = bands_[terms_[k].band].satisfied(next, a) ? 1.0 : 0.0;
        break;
      case Term::kActionPenalty:
        raw = a[0] * a[0] + a[1] * a[1];
        break;
    }
    out.reward.push_back(spec_[k].scale * raw * kDt);
  }

  state_ = next;
  out.done = std::abs(state_.position[0]) > kArenaHalfWidth ||
             std::abs(state_.position[1]) > kArenaHalfWidth;
  out.timeout = !out.done && state_.step >= config_.episode_steps;
  finished_ = out.done || out.timeout;
  out.observation = observation();
  return out;
}

PointMassEnv make_env(const EnvConfig& config, std::uint64_t seed) {
  const auto names = env_names();
  if (std::find(names.begin(), names.end(), config.name) == names.end()) {
    throw std::invalid_argument("unknown environment '" + config.name +
                                "' (valid: pointmass-aligned, pointmass-styled, "
                                "pointmass-conflict)");
  }
  EnvConfig c = config;
  if (c.name == kEnvStyled && c.bands.empty()) c.bands = default_feasible_bands();
  return PointMassEnv(std::move(c), seed);
}

}  // namespace gcr
