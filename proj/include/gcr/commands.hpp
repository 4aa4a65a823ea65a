#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcr/run_config.hpp"

namespace gcr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

struct TrainOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> algo;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
};

struct CompareOptions {
  std::optional<std::filesystem::path> config;
  std::vector<std::string> algos;
  int seeds = 10;
  std::filesystem::path out;
};

struct BandsOptions {
  std::optional<std::filesystem::path> config;
  std::string task;
  int n_objectives = 1;
  int n_samples = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

// Each command validates its inputs before touching the output directory and
// returns a process exit code. Diagnostics go to `err`.
int run_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int run_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err);
int run_bands(const BandsOptions& opts, std::ostream& out, std::ostream& err);

// Result of a single training run written under `dir`.
struct RunOutcome {
  bool ok = false;
  std::string error;
  double final_return = 0.0;
  double avg_conflict = 0.0;
};

RunOutcome train_to_directory(const RunConfig& config, const std::filesystem::path& dir);

// Log-spaced entropy coefficients covering [lo, hi].
std::vector<double> entropy_grid(double lo, double hi, int points);

}  // namespace gcr
