#include "gcr/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gcr/checkpoint.hpp"
#include "gcr/errors.hpp"
#include "gcr/metrics.hpp"

namespace gcr {

namespace fs = std::filesystem;

namespace {

RunConfig load_or_default(const std::optional<fs::path>& path) {
  RunConfig cfg = path ? load_run_config(*path) : RunConfig{};
  cfg.train.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path.string());
  o << text;
}

struct CellResult {
  std::uint64_t seed = 0;
  RunOutcome outcome;
  bool rerun = false;
};

std::string seed_dir(std::uint64_t seed) { return "seed" + std::to_string(seed); }

}  // namespace

std::vector<double> entropy_grid(double lo, double hi, int points) {
  if (points < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw std::invalid_argument("entropy_grid: need points >= 1 and 0 < lo <= hi");
  }
  if (points == 1) return {std::sqrt(lo * hi)};
  std::vector<double> out;
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < points; ++i) {
    out.push_back(std::exp(a + (b - a) * i / (points - 1)));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

RunOutcome train_to_directory(const RunConfig& config, const fs::path& dir) {
  RunOutcome outcome;
  fs::create_directories(dir);
  write_text(dir / "config.resolved", resolved_config_text(config));
  Trainer trainer(config.train);
  MetricsCsvWriter csv(dir / "metrics.csv", trainer.env_spec());
  CosineLogWriter cosine(dir / "cosine.jsonl");
  std::vector<double> conflicts;
  double last_return = std::nan("");
  try {
    trainer.train([&](const UpdateRecord& rec) {
      csv.write(rec);
      if (rec.cosine) cosine.write(*rec.cosine);
      conflicts.push_back(rec.conflict_count);
      last_return = rec.mean_return;
    });
  } catch (const NumericalError& e) {
    const auto [actor, critic] = trainer.last_good_networks();
    save_checkpoint(dir / "checkpoint.json", trainer.critic_spec(), actor, critic);
    outcome.error = e.what();
    return outcome;
  }
  save_checkpoint(dir / "checkpoint.json", trainer.critic_spec(), trainer.actor(),
                  trainer.critic());
  outcome.ok = true;
  outcome.final_return = last_return;
  outcome.avg_conflict = avg_conflict(conflicts);
  return outcome;
}

int run_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_or_default(opts.config);
    if (opts.algo) cfg.train.algo = parse_algo_mode(*opts.algo);
    if (opts.seed) cfg.train.seed = *opts.seed;
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  RunOutcome r;
  try {
    r = train_to_directory(cfg, opts.out);
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  }
  if (!r.ok) {
    err << "numerical abort: " << r.error << "\n"
        << "last good parameters written to " << (opts.out / "checkpoint.json").string() << '\n';
    return kExitNumerical;
  }
  out << "trained " << to_string(cfg.train.algo) << " on " << cfg.train.env.name << " seed "
      << cfg.train.seed << ": final mean return " << format_double(r.final_return)
      << ", avg conflict " << format_double(r.avg_conflict) << '\n';
  return kExitOk;
}

int run_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig base;
  std::vector<AlgoMode> algos;
  try {
    base = load_or_default(opts.config);
    if (opts.algos.size() < 2) throw std::invalid_argument("compare needs at least two algorithms");
    for (const auto& a : opts.algos) algos.push_back(parse_algo_mode(a));
    if (opts.seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const CompareConfig& cc = base.compare;
  fs::create_directories(opts.out);

  struct AlgoResult {
    AlgoMode algo;
    double entropy_coef = 0.0;
    std::vector<CellResult> cells;
  };
  std::vector<AlgoResult> results;

  for (AlgoMode algo : algos) {
    AlgoResult ar{algo, base.train.entropy_coef, {}};
    const fs::path algo_dir = opts.out / std::string(to_string(algo));
    if (cc.sweep) {
      std::ofstream sweep_csv;
      fs::create_directories(algo_dir / "sweep");
      sweep_csv.open(algo_dir / "sweep" / "sweep.csv");
      sweep_csv << "entropy_coef,seed,final_return,status\n";
      double best = -std::numeric_limits<double>::infinity();
      for (double coef : entropy_grid(cc.sweep_min, cc.sweep_max, cc.sweep_points)) {
        std::vector<double> finals;
        for (int s = 0; s < cc.sweep_seeds; ++s) {
          RunConfig cell = base;
          cell.train.algo = algo;
          cell.train.entropy_coef = coef;
          cell.train.updates = std::max(1, base.train.updates / 2);
          // Sweep seeds are kept apart from the evaluation seeds.
          cell.train.seed = 100000 + static_cast<std::uint64_t>(s);
          const fs::path dir =
              algo_dir / "sweep" / ("coef" + format_double(coef)) / seed_dir(cell.train.seed);
          const RunOutcome r = train_to_directory(cell, dir);
          sweep_csv << format_double(coef) << ',' << cell.train.seed << ','
                    << format_double(r.final_return) << ',' << (r.ok ? "ok" : "failed") << '\n';
          if (r.ok && std::isfinite(r.final_return)) finals.push_back(r.final_return);
        }
        if (finals.size() == static_cast<std::size_t>(cc.sweep_seeds) && mean(finals) > best) {
          best = mean(finals);
          ar.entropy_coef = coef;
        }
      }
      out << to_string(algo) << ": entropy_coef " << format_double(ar.entropy_coef) << '\n';
    }
    for (int s = 0; s < opts.seeds; ++s) {
      RunConfig cell = base;
      cell.train.algo = algo;
      cell.train.entropy_coef = ar.entropy_coef;
      cell.train.seed = base.train.seed + static_cast<std::uint64_t>(s);
      CellResult cr{cell.train.seed, train_to_directory(cell, algo_dir / seed_dir(cell.train.seed)), false};
      if (!cr.outcome.ok) err << to_string(algo) << " seed " << cr.seed << " failed: " << cr.outcome.error << '\n';
      ar.cells.push_back(std::move(cr));
    }
    if (cc.outlier_rerun) {
      std::vector<double> finals;
      for (const auto& c : ar.cells) {
        if (c.outcome.ok) finals.push_back(c.outcome.final_return);
      }
      const double m = mean(finals);
      const double sd = stddev(finals);
      for (auto& c : ar.cells) {
        if (!c.outcome.ok || sd == 0.0 || std::abs(c.outcome.final_return - m) / sd <= 3.0) continue;
        RunConfig cell = base;
        cell.train.algo = algo;
        cell.train.entropy_coef = ar.entropy_coef;
        cell.train.seed = 200000 + c.seed;
        out << "outlier rerun: " << to_string(algo) << " seed " << c.seed << " -> seed "
            << cell.train.seed << '\n';
        c.seed = cell.train.seed;
        c.outcome = train_to_directory(cell, algo_dir / seed_dir(cell.train.seed));
        c.rerun = true;
      }
    }
    results.push_back(std::move(ar));
  }

  // Pairing is by position in the seed list; a failed cell drops the pair.
  std::ofstream summary(opts.out / "summary.csv");
  summary << "algo,entropy_coef,n,mean_final,std_final,max_final,avg_conflict,spc_vs_first,"
             "win_rate_vs_first,p_one_sided,missing,reruns\n";
  out << std::left << std::setw(12) << "algo" << std::setw(14) << "mean+-std" << std::setw(10)
      << "max" << std::setw(10) << "SPC%" << std::setw(10) << "win%" << "p\n";
  std::vector<double> first_finals;
  for (std::size_t a = 0; a < results.size(); ++a) {
    const auto& ar = results[a];
    std::vector<double> finals;
    std::vector<double> conflicts;
    std::size_t missing = 0;
    std::size_t reruns = 0;
    for (const auto& c : ar.cells) {
      if (c.rerun) ++reruns;
      if (c.outcome.ok && std::isfinite(c.outcome.final_return)) {
        finals.push_back(c.outcome.final_return);
        conflicts.push_back(c.outcome.avg_conflict);
      } else {
        ++missing;
      }
    }
    const double m = mean(finals);
    const double sd = stddev(finals);
    const double mx = finals.empty() ? std::nan("") : *std::max_element(finals.begin(), finals.end());
    std::string spc_text = "", win_text = "", p_text = "";
    if (a == 0) {
      for (const auto& c : ar.cells) {
        first_finals.push_back(c.outcome.ok ? c.outcome.final_return : std::nan(""));
      }
    } else {
      std::vector<double> reference;
      for (double v : first_finals) {
        if (std::isfinite(v)) reference.push_back(v);
      }
      const auto s = spc(mean(reference), m);
      std::vector<double> pa;
      std::vector<double> pb;
      for (std::size_t i = 0; i < ar.cells.size() && i < first_finals.size(); ++i) {
        const auto& c = ar.cells[i];
        if (!c.outcome.ok || !std::isfinite(first_finals[i]) || !std::isfinite(c.outcome.final_return)) continue;
        pa.push_back(c.outcome.final_return);
        pb.push_back(first_finals[i]);
      }
      if (s) spc_text = format_double(*s);
      if (!pa.empty()) {
        const WinRate w = win_rate(pa, pb);
        win_text = format_double(w.percent);
        if (pa.size() > 1 && w.p_one_sided) p_text = format_double(*w.p_one_sided);
      }
    }
    summary << to_string(ar.algo) << ',' << format_double(ar.entropy_coef) << ',' << finals.size()
            << ',' << format_double(m) << ',' << format_double(sd) << ',' << format_double(mx)
            << ',' << format_double(mean(conflicts)) << ',' << spc_text << ',' << win_text << ','
            << p_text << ',' << missing << ',' << reruns << '\n';
    std::ostringstream ms;
    ms << std::setprecision(4) << m << "+-" << sd;
    out << std::left << std::setw(12) << to_string(ar.algo) << std::setw(14) << ms.str()
        << std::setw(10) << std::setprecision(4) << mx << std::setw(10) << spc_text.substr(0, 8)
        << std::setw(10) << win_text.substr(0, 8) << p_text.substr(0, 8) << '\n';
  }
  return kExitOk;
}

int run_bands(const BandsOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig base;
  try {
    base = load_or_default(opts.config);
    if (opts.task != kEnvStyled) {
      throw std::invalid_argument("task '" + opts.task + "' has no band objectives (use " +
                                  std::string(kEnvStyled) + ")");
    }
    if (opts.n_objectives < 1 || opts.n_objectives > static_cast<int>(kAllBandQuantities.size())) {
      throw std::invalid_argument("--n-objectives must be between 1 and " +
                                  std::to_string(kAllBandQuantities.size()) +
                                  " (available: speed, heading, height, energy)");
    }
    if (opts.n_samples < 1) throw std::invalid_argument("--n-samples must be >= 1");
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  fs::create_directories(opts.out);
  Rng rng(opts.seed);
  std::uniform_int_distribution<int> level(0, kNumBandLevels - 1);
  for (int s = 0; s < opts.n_samples; ++s) {
    std::vector<BandQuantity> pool(kAllBandQuantities.begin(), kAllBandQuantities.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    RunConfig cfg = base;
    cfg.train.env.name = std::string(kEnvStyled);
    cfg.train.env.bands.clear();
    for (int m = 0; m < opts.n_objectives; ++m) {
      cfg.train.env.bands.push_back({pool[static_cast<std::size_t>(m)], level(rng)});
    }
    cfg.train.validate();
    const fs::path path = opts.out / ("bands_" + std::to_string(s) + ".cfg");
    write_text(path, resolved_config_text(cfg));
    out << path.string() << '\n';
  }
  return kExitOk;
}

}  // namespace gcr
