#pragma once

#include <filesystem>
#include <string>

#include "gcr/trainer.hpp"

namespace gcr {

// Settings for the paired-comparison harness.
struct CompareConfig {
  bool sweep = true;          // tune entropy_coef per algorithm first
  int sweep_points = 5;       // log-spaced over [sweep_min, sweep_max]
  double sweep_min = 1e-4;
  double sweep_max = 0.03;
  int sweep_seeds = 3;        // at half the update budget
  bool outlier_rerun = false; // rerun cells whose final return has |z| > 3

  bool operator==(const CompareConfig&) const = default;
};

struct RunConfig {
  TrainConfig train;
  CompareConfig compare;

  bool operator==(const RunConfig&) const = default;
};

// Flat "key = value" text, '#' starts a comment. Unknown keys, repeated keys
// and malformed values are errors naming the line.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Every effective setting, with doubles written in round-trip form; parsing
// the result yields an equal RunConfig.
std::string resolved_config_text(const RunConfig& config);

}  // namespace gcr
