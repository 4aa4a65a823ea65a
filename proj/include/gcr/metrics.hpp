#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcr/reward_spec.hpp"
#include "gcr/trainer.hpp"

namespace gcr {

// Symmetric percent change 100 * (b - a) / ((a + b) / 2); empty when a + b == 0.
std::optional<double> spc(double a, double b);

// Mean of logged raw-gradient conflict counts; 0 for an empty log.
double avg_conflict(std::span<const double> counts);

struct WinRate {
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  double percent = 0.0;  // (wins + ties / 2) / n * 100
  // Exact sign test against 0.5 over the untied pairs. Empty when every
  // pair is tied or no pairs were given.
  std::optional<double> p_one_sided;  // P(X >= wins)
  std::optional<double> p_two_sided;
};

// Pairs are (a[i], b[i]); a win means a[i] > b[i].
WinRate win_rate(std::span<const double> a, std::span<const double> b);

// P(X >= k) for X ~ Binomial(n, 1/2), by exact summation.
double binomial_upper_tail(std::size_t n, std::size_t k);

// Row-major K x K cosine matrix; 0 against zero vectors, 1 on the diagonal
// of nonzero vectors.
std::vector<double> cosine_matrix(const std::vector<std::vector<double>>& vectors);

// Rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
// Sample standard deviation; 0 for fewer than two values.
double stddev(std::span<const double> v);

// One CSV row per update. Column names follow the environment's components.
class MetricsCsvWriter {
 public:
  MetricsCsvWriter(const std::filesystem::path& path, const RewardSpec& env_spec);
  void write(const UpdateRecord& rec);

  static std::string header(const RewardSpec& env_spec);
  static std::string row(const UpdateRecord& rec);

 private:
  std::ofstream out_;
};

// Cosine snapshots as JSON lines keyed by update index.
class CosineLogWriter {
 public:
  explicit CosineLogWriter(const std::filesystem::path& path);
  void write(const CosineSnapshot& snap);

 private:
  std::ofstream out_;
};

std::string cosine_snapshot_to_json(const CosineSnapshot& snap);
std::vector<CosineSnapshot> read_cosine_history(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

CsvTable read_metrics_csv(const std::filesystem::path& path);

// Shortest round-trip decimal for a double ("nan" for NaN).
std::string format_double(double v);

}  // namespace gcr
