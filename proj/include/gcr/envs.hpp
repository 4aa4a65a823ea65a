#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcr/reward_spec.hpp"

namespace gcr {

// Point-mass constants. The mass is 1, so an action is an acceleration.
inline constexpr double kDt = 0.05;
inline constexpr double kDamping = 0.05;
inline constexpr double kArenaHalfWidth = 10.0;
inline constexpr std::array<double, 2> kGoal = {5.0, 0.0};
inline constexpr int kNumBandLevels = 5;

inline constexpr std::string_view kEnvAligned = "pointmass-aligned";
inline constexpr std::string_view kEnvStyled = "pointmass-styled";
inline constexpr std::string_view kEnvConflict = "pointmass-conflict";

std::vector<std::string> env_names();

enum class BandQuantity { kSpeed, kHeading, kHeight, kEnergy };

inline constexpr std::array<BandQuantity, 4> kAllBandQuantities = {
    BandQuantity::kSpeed, BandQuantity::kHeading, BandQuantity::kHeight,
    BandQuantity::kEnergy};

std::string_view to_string(BandQuantity q);
BandQuantity parse_band_quantity(std::string_view text);

// Boundaries of the five ascending, non-overlapping ranges that partition the
// measured range of `q`.
std::array<double, kNumBandLevels + 1> band_edges(BandQuantity q);

struct EnvState {
  std::array<double, 2> position{0.0, 0.0};
  std::array<double, 2> velocity{0.0, 0.0};
  int step = 0;
};

// {0, bonus}-valued reward granted while a measured quantity lies in [lo, hi).
struct BandObjective {
  BandQuantity quantity = BandQuantity::kSpeed;
  double lo = 0.0;
  double hi = 1.0;
  double bonus = 0.0;

  // `action` is the clipped action applied on the step that produced `state`.
  // NaN when the quantity is undefined (heading at near-zero speed).
  static double measure(BandQuantity q, const EnvState& state,
                        std::span<const double> action);
  bool satisfied(const EnvState& state, std::span<const double> action) const;
  double reward(const EnvState& state, std::span<const double> action) const;
};

struct BandSelection {
  BandQuantity quantity = BandQuantity::kSpeed;
  int level = 0;  // 0..4, ascending

  bool operator==(const BandSelection&) const = default;
};

struct EnvConfig {
  std::string name{kEnvAligned};
  double task_scale = 1.0;
  double penalty_scale = 0.1;
  bool with_regulariser = true;
  int episode_steps = 400;
  double band_bonus = 0.25;
  std::vector<BandSelection> bands;

  bool operator==(const EnvConfig&) const = default;
};

// Default band set for pointmass-styled when none is configured: every band
// chosen so that all four are jointly satisfiable while cruising toward the
// goal.
std::vector<BandSelection> default_feasible_bands();

struct StepResult {
  std::vector<double> observation;
  std::vector<double> reward;  // length K, already scaled
  bool done = false;           // termination: no bootstrap
  bool timeout = false;        // horizon reached: bootstrap from observation
};

// Damped 2-D double integrator with an additive vector reward. Action is
// clipped to [-1, 1]^2, velocity integrates a*dt and is then damped, position
// integrates the new velocity. Episodes terminate on leaving the arena and
// time out after `episode_steps` steps.
class PointMassEnv {
 public:
  static constexpr std::size_t kObsDim = 4;
  static constexpr std::size_t kActDim = 2;

  PointMassEnv(EnvConfig config, std::uint64_t seed);

  const RewardSpec& spec() const { return spec_; }
  const EnvConfig& config() const { return config_; }
  const std::vector<BandObjective>& bands() const { return bands_; }
  const EnvState& state() const { return state_; }
  bool needs_reset() const { return finished_; }

  std::vector<double> reset();
  // Test hook: start an episode from an explicit state.
  std::vector<double> reset_to(const EnvState& state);
  StepResult step(std::span<const double> action);
  std::vector<double> observation() const;

 private:
  enum class Term { kGoalVelocity, kPlusX, kMinusX, kBand, kActionPenalty };
  struct ActiveTerm {
    Term term;
    std::size_t band = 0;
  };

  EnvConfig config_;
  RewardSpec spec_;
  std::vector<ActiveTerm> terms_;
  std::vector<BandObjective> bands_;
  EnvState state_;
  std::mt19937_64 rng_;
  bool finished_ = true;
};

// Validates the name and builds the environment with its reward spec.
PointMassEnv make_env(const EnvConfig& config, std::uint64_t seed);

}  // namespace gcr
