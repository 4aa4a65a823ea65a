#include "gcr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gcr/advantage.hpp"
#include "gcr/errors.hpp"
#include "gcr/losses.hpp"

namespace gcr {

namespace {

struct Seeds {
  std::uint64_t envs, actor, critic, collector, shuffle, resolve;
};

Seeds derive_seeds(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x6763u};
  std::vector<std::uint32_t> w(12);
  seq.generate(w.begin(), w.end());
  auto pick = [&](std::size_t i) { return (std::uint64_t{w[2 * i]} << 32) | w[2 * i + 1]; };
  return {pick(0), pick(1), pick(2), pick(3), pick(4), pick(5)};
}

std::vector<PointMassEnv> build_envs(const TrainConfig& c) {
  c.validate();
  const std::uint64_t base = derive_seeds(c.seed).envs;
  std::vector<PointMassEnv> envs;
  envs.reserve(static_cast<std::size_t>(c.num_envs));
  for (int e = 0; e < c.num_envs; ++e) {
    envs.push_back(make_env(c.env, base + static_cast<std::uint64_t>(e)));
  }
  return envs;
}

RewardSpec critic_spec_for(const TrainConfig& c) {
  if (c.algo == AlgoMode::kPpo) return RewardSpec::scalarized();
  return make_env(c.env, 0).spec();
}

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled) {}
  void start() {
    if (enabled_) begin_ = std::chrono::steady_clock::now();
  }
  // Seconds since start().
  double lap() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - begin_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point begin_{};
};

void require_finite_value(double v, const char* what, int update) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " is non-finite at update " +
                         std::to_string(update));
  }
}

}  // namespace

std::string_view to_string(AlgoMode mode) {
  switch (mode) {
    case AlgoMode::kPpo: return "ppo";
    case AlgoMode::kMultihead: return "multihead";
    case AlgoMode::kGcrNoPriority: return "gcr-noprio";
    case AlgoMode::kGcr: return "gcr";
  }
  return "unknown";
}

std::vector<std::string> algo_mode_names() { return {"ppo", "multihead", "gcr-noprio", "gcr"}; }

AlgoMode parse_algo_mode(std::string_view text) {
  for (AlgoMode m : {AlgoMode::kPpo, AlgoMode::kMultihead, AlgoMode::kGcrNoPriority,
                     AlgoMode::kGcr}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(text) +
                              "' (valid: ppo, multihead, gcr-noprio, gcr)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must be in (0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must be in [0, 1]");
  if (!(clip > 0.0 && clip < 1.0)) fail("clip must be in (0, 1)");
  if (!(entropy_coef >= 0.0) || !std::isfinite(entropy_coef)) fail("entropy_coef must be >= 0");
  if (!(target_kl > 0.0)) fail("target_kl must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (epochs <= 0) fail("epochs must be positive");
  if (minibatches <= 0) fail("minibatches must be positive");
  if (num_envs <= 0) fail("num_envs must be positive");
  if (horizon <= 0) fail("horizon must be positive");
  if (updates < 0) fail("updates must be >= 0");
  if (!(max_grad_norm >= 0.0)) fail("max_grad_norm must be >= 0");
  if (return_window <= 0) fail("return_window must be positive");
  if (log.cosine_cadence < 0) fail("log.cosine_cadence must be >= 0");
  for (std::size_t h : hidden) {
    if (h == 0) fail("hidden layer sizes must be positive");
  }
  try {
    make_env(env, 0);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  const long n = static_cast<long>(num_envs) * horizon;
  if (n < 2) fail("num_envs * horizon must be at least 2");
  if (n % minibatches != 0) fail("num_envs * horizon must be divisible by minibatches");
}

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      critic_spec_(critic_spec_for(config_)),
      collector_(build_envs(config_), derive_seeds(config_.seed).collector, true),
      actor_(PointMassEnv::kObsDim, PointMassEnv::kActDim, config_.hidden,
             derive_seeds(config_.seed).actor),
      critic_(PointMassEnv::kObsDim, config_.hidden, critic_spec_,
              derive_seeds(config_.seed).critic),
      actor_opt_(actor_.size()),
      critic_opt_(critic_.size()),
      shuffle_rng_(derive_seeds(config_.seed).shuffle),
      resolve_rng_(derive_seeds(config_.seed).resolve),
      lr_(config_.learning_rate) {
  last_good_ = {actor_.flat(), critic_.flat()};
}

std::pair<GaussianActor, MultiHeadCritic> Trainer::last_good_networks() const {
  GaussianActor a = actor_;
  MultiHeadCritic c = critic_;
  a.set_flat(last_good_.actor);
  c.set_flat(last_good_.critic);
  return {std::move(a), std::move(c)};
}

UpdateRecord Trainer::step() {
  const TrainConfig& c = config_;
  const int update = updates_done_;
  Stopwatch watch(c.log.timing);
  UpdateRecord rec;
  rec.update = update;

  watch.start();
  const TrajectoryBatch batch = collector_.collect(actor_, critic_, static_cast<std::size_t>(c.horizon));
  rec.t_collect_s = watch.lap();

  watch.start();
  const bool scalar = c.algo == AlgoMode::kPpo;
  const GaeResult adv = scalar ? gae(batch, summed_rewards(batch), c.gamma, c.gae_lambda)
                               : gae(batch, c.gamma, c.gae_lambda);
  const NormalizedAdvantages norm = normalize(adv.advantages);
  rec.advantage_denominator = norm.denominator;
  rec.t_gae_s = watch.lap();

  std::vector<ComponentKind> kinds = critic_spec_.kinds();
  if (c.project_entropy && c.entropy_coef > 0.0) kinds.push_back(ComponentKind::kRegulariser);
  ResolveOptions resolve_opts;
  resolve_opts.use_priority = c.algo == AlgoMode::kGcr;
  resolve_opts.reference = c.symmetric_reference;

  const std::size_t n = batch.size();
  const std::size_t mb_size = n / static_cast<std::size_t>(c.minibatches);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t num_steps = 0;
  const bool want_cosine = c.log.cosine_cadence > 0 && update % c.log.cosine_cadence == 0;

  double t_update = 0.0;
  double t_project = 0.0;
  for (int epoch = 0; epoch < c.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    for (int m = 0; m < c.minibatches; ++m) {
      watch.start();
      const std::span<const std::size_t> rows(order.data() + static_cast<std::size_t>(m) * mb_size,
                                              mb_size);
      const MiniBatch mb = gather_minibatch(batch, norm.normalized, adv.targets, rows);
      PolicyGradients pg = component_policy_gradients(actor_, mb, c.clip);
      double surrogate_sum = 0.0;
      for (double l : pg.losses) surrogate_sum += l;
      require_finite_value(surrogate_sum, "surrogate loss", update);
      std::vector<double> entropy_grad = entropy_bonus_gradient(actor_, c.entropy_coef);

      Stopwatch proj_watch(c.log.timing);
      proj_watch.start();
      GradientSet gs{std::move(pg.gradients), kinds};
      if (c.project_entropy && c.entropy_coef > 0.0) gs.gradients.push_back(entropy_grad);
      std::vector<double> direction;
      ConflictStats stats;
      if (c.algo == AlgoMode::kPpo || c.algo == AlgoMode::kMultihead) {
        stats = detect_conflicts(gs);
        direction = sum_gradients(gs);
      } else {
        ResolveResult res = resolve(gs, resolve_rng_, resolve_opts);
        stats = std::move(res.stats);
        direction = std::move(res.final_gradient);
      }
      if (gs.size() > critic_spec_.size()) {
        // The entropy vector took part in resolution but is not a reward
        // component; report conflicts among the components only.
        GradientSet components{
            std::vector<std::vector<double>>(gs.gradients.begin(),
                                             gs.gradients.begin() + critic_spec_.size()),
            critic_spec_.kinds()};
        stats = detect_conflicts(components);
      } else {
        for (std::size_t i = 0; i < direction.size(); ++i) direction[i] += entropy_grad[i];
      }
      t_project += proj_watch.lap();

      if (want_cosine && num_steps == 0) {
        CosineSnapshot snap;
        snap.update = update;
        snap.num_components = critic_spec_.size();
        snap.cosine.resize(snap.num_components * snap.num_components);
        for (std::size_t i = 0; i < snap.num_components; ++i) {
          for (std::size_t j = 0; j < snap.num_components; ++j) {
            snap.cosine[i * snap.num_components + j] = stats.cos(i, j);
          }
        }
        if (c.log.gradient_vectors) {
          snap.gradients.assign(gs.gradients.begin(),
                                gs.gradients.begin() + critic_spec_.size());
          snap.final_gradient = direction;
        }
        rec.cosine = std::move(snap);
      }
      for (double g : direction) require_finite_value(g, "actor gradient", update);

      clip_grad_norm(direction, c.max_grad_norm);
      std::vector<double> theta = actor_.flat();
      actor_opt_.step(theta, direction, lr_);
      actor_.set_flat(theta);

      ValueGradient vg = value_loss_gradient(critic_, mb.observations, mb.targets);
      require_finite_value(vg.loss, "value loss", update);
      clip_grad_norm(vg.gradient, c.max_grad_norm);
      std::vector<double> phi = critic_.flat();
      critic_opt_.step(phi, vg.gradient, lr_);
      critic_.set_flat(phi);

      const std::vector<double> new_logp = actor_.log_prob(mb.observations, mb.actions);
      const double kl = approx_kl(mb.old_log_probs, new_logp);
      require_finite_value(kl, "approximate KL", update);
      lr_ = adapt_lr(lr_, kl, c.target_kl);

      rec.loss_surrogate_sum += surrogate_sum;
      rec.loss_value += vg.loss;
      rec.kl += kl;
      rec.conflict_count += static_cast<double>(stats.conflict_count);
      ++num_steps;
      t_update += watch.lap();
    }
  }
  const double steps = static_cast<double>(num_steps);
  rec.loss_surrogate_sum /= steps;
  rec.loss_value /= steps;
  rec.kl /= steps;
  rec.conflict_count /= steps;
  rec.lr = lr_;
  rec.entropy = actor_.entropy();
  rec.t_update_s = t_update;
  rec.t_project_s = t_project;

  for (const auto& r : batch.episode_returns) {
    recent_returns_.push_back(r);
    if (recent_returns_.size() > static_cast<std::size_t>(c.return_window)) {
      recent_returns_.pop_front();
    }
  }
  rec.episodes_finished = batch.episode_returns.size();
  const std::size_t k = env_spec().size();
  rec.component_returns.assign(k, std::numeric_limits<double>::quiet_NaN());
  rec.mean_return = std::numeric_limits<double>::quiet_NaN();
  if (!recent_returns_.empty()) {
    std::fill(rec.component_returns.begin(), rec.component_returns.end(), 0.0);
    double total = 0.0;
    for (const auto& r : recent_returns_) {
      for (std::size_t i = 0; i < k; ++i) {
        rec.component_returns[i] += r[i];
        total += r[i];
      }
    }
    const double count = static_cast<double>(recent_returns_.size());
    for (double& v : rec.component_returns) v /= count;
    rec.mean_return = total / count;
  }

  last_good_ = {actor_.flat(), critic_.flat()};
  ++updates_done_;
  return rec;
}

void Trainer::train(const std::function<void(const UpdateRecord&)>& on_update) {
  while (updates_done_ < config_.updates) {
    const UpdateRecord rec = step();
    if (on_update) on_update(rec);
  }
}

}  // namespace gcr
