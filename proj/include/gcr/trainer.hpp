#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gcr/envs.hpp"
#include "gcr/gradres.hpp"
#include "gcr/nets.hpp"
#include "gcr/optim.hpp"
#include "gcr/reward_spec.hpp"
#include "gcr/rollout.hpp"

namespace gcr {

enum class AlgoMode { kPpo, kMultihead, kGcrNoPriority, kGcr };

std::string_view to_string(AlgoMode mode);
AlgoMode parse_algo_mode(std::string_view text);
std::vector<std::string> algo_mode_names();

struct LogConfig {
  int cosine_cadence = 10;        // 0 disables cosine snapshots
  bool gradient_vectors = false;  // also keep raw and final vectors in snapshots
  bool timing = true;             // false writes zero timings (byte-stable CSV)

  bool operator==(const LogConfig&) const = default;
};

struct TrainConfig {
  AlgoMode algo = AlgoMode::kGcr;
  std::uint64_t seed = 0;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.005;
  double target_kl = 0.01;
  double learning_rate = 1e-3;
  int epochs = 5;
  int minibatches = 4;
  int num_envs = 64;
  int horizon = 64;
  int updates = 300;
  std::vector<std::size_t> hidden = {64, 64};
  double max_grad_norm = 1.0;
  SymmetricReference symmetric_reference = SymmetricReference::kOriginal;
  bool project_entropy = false;
  int return_window = 100;  // completed episodes averaged for mean_return
  EnvConfig env;
  LogConfig log;

  // Throws std::invalid_argument describing the first bad field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct CosineSnapshot {
  int update = 0;
  std::size_t num_components = 0;
  std::vector<double> cosine;  // [K*K], raw gradients
  std::vector<std::vector<double>> gradients;  // optional raw vectors
  std::vector<double> final_gradient;          // optional applied direction
};

struct UpdateRecord {
  int update = 0;
  double mean_return = 0.0;  // NaN until an episode has finished
  std::vector<double> component_returns;
  std::size_t episodes_finished = 0;  // in this update's segment
  double loss_surrogate_sum = 0.0;
  double loss_value = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double lr = 0.0;
  double conflict_count = 0.0;  // mean over mini-batches
  double advantage_denominator = 0.0;
  double t_collect_s = 0.0;
  double t_gae_s = 0.0;
  double t_update_s = 0.0;   // whole optimisation phase, projection included
  double t_project_s = 0.0;  // conflict detection and resolution only
  std::optional<CosineSnapshot> cosine;
};

class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  const TrainConfig& config() const { return config_; }
  // Spec the critic is trained against: the environment's, or a single
  // summed component for ppo.
  const RewardSpec& critic_spec() const { return critic_spec_; }
  const RewardSpec& env_spec() const { return collector_.spec(); }
  const GaussianActor& actor() const { return actor_; }
  const MultiHeadCritic& critic() const { return critic_; }
  double learning_rate() const { return lr_; }
  int updates_done() const { return updates_done_; }

  // One collect / advantage / optimise cycle. Throws NumericalError on
  // non-finite data; parameters from before the failing update remain
  // available through last_good().
  UpdateRecord step();

  // Runs the remaining updates, invoking `on_update` after each.
  void train(const std::function<void(const UpdateRecord&)>& on_update = {});

  struct Snapshot {
    std::vector<double> actor;
    std::vector<double> critic;
  };
  const Snapshot& last_good() const { return last_good_; }
  // Networks restored from last_good().
  std::pair<GaussianActor, MultiHeadCritic> last_good_networks() const;

 private:
  TrainConfig config_;
  RewardSpec critic_spec_;
  RolloutCollector collector_;
  GaussianActor actor_;
  MultiHeadCritic critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  Rng shuffle_rng_;
  Rng resolve_rng_;
  double lr_;
  int updates_done_ = 0;
  std::deque<std::vector<double>> recent_returns_;
  Snapshot last_good_;
};

}  // namespace gcr
