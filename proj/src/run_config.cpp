#include "gcr/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gcr/metrics.hpp"

namespace gcr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  return out;
}

long long parse_int(const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  }
  return out;
}

int parse_small_int(const std::string& v) {
  const long long x = parse_int(v);
  if (x < -1000000000LL || x > 1000000000LL) throw std::invalid_argument("integer out of range");
  return static_cast<int>(x);
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::vector<std::size_t> parse_sizes(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const long long x = parse_int(trim(item));
    if (x <= 0) throw std::invalid_argument("layer sizes must be positive");
    out.push_back(static_cast<std::size_t>(x));
  }
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list of sizes");
  return out;
}

SymmetricReference parse_reference(const std::string& v) {
  if (v == "original") return SymmetricReference::kOriginal;
  if (v == "running") return SymmetricReference::kRunning;
  throw std::invalid_argument("expected original or running, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"algo", [](RunConfig& c, const std::string& v) { c.train.algo = parse_algo_mode(v); }},
      {"seed", [](RunConfig& c, const std::string& v) {
         const long long s = parse_int(v);
         if (s < 0) throw std::invalid_argument("seed must be >= 0");
         c.train.seed = static_cast<std::uint64_t>(s);
       }},
      {"gamma", [](RunConfig& c, const std::string& v) { c.train.gamma = parse_double(v); }},
      {"gae_lambda", [](RunConfig& c, const std::string& v) { c.train.gae_lambda = parse_double(v); }},
      {"clip", [](RunConfig& c, const std::string& v) { c.train.clip = parse_double(v); }},
      {"entropy_coef", [](RunConfig& c, const std::string& v) { c.train.entropy_coef = parse_double(v); }},
      {"target_kl", [](RunConfig& c, const std::string& v) { c.train.target_kl = parse_double(v); }},
      {"learning_rate", [](RunConfig& c, const std::string& v) { c.train.learning_rate = parse_double(v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_small_int(v); }},
      {"minibatches", [](RunConfig& c, const std::string& v) { c.train.minibatches = parse_small_int(v); }},
      {"num_envs", [](RunConfig& c, const std::string& v) { c.train.num_envs = parse_small_int(v); }},
      {"horizon", [](RunConfig& c, const std::string& v) { c.train.horizon = parse_small_int(v); }},
      {"updates", [](RunConfig& c, const std::string& v) { c.train.updates = parse_small_int(v); }},
      {"hidden", [](RunConfig& c, const std::string& v) { c.train.hidden = parse_sizes(v); }},
      {"max_grad_norm", [](RunConfig& c, const std::string& v) { c.train.max_grad_norm = parse_double(v); }},
      {"symmetric_reference", [](RunConfig& c, const std::string& v) { c.train.symmetric_reference = parse_reference(v); }},
      {"project_entropy", [](RunConfig& c, const std::string& v) { c.train.project_entropy = parse_bool(v); }},
      {"return_window", [](RunConfig& c, const std::string& v) { c.train.return_window = parse_small_int(v); }},
      {"env.name", [](RunConfig& c, const std::string& v) { c.train.env.name = v; }},
      {"env.task_scale", [](RunConfig& c, const std::string& v) { c.train.env.task_scale = parse_double(v); }},
      {"env.penalty_scale", [](RunConfig& c, const std::string& v) { c.train.env.penalty_scale = parse_double(v); }},
      {"env.with_regulariser", [](RunConfig& c, const std::string& v) { c.train.env.with_regulariser = parse_bool(v); }},
      {"env.episode_steps", [](RunConfig& c, const std::string& v) { c.train.env.episode_steps = parse_small_int(v); }},
      {"band.bonus", [](RunConfig& c, const std::string& v) { c.train.env.band_bonus = parse_double(v); }},
      {"log.cosine_cadence", [](RunConfig& c, const std::string& v) { c.train.log.cosine_cadence = parse_small_int(v); }},
      {"log.gradient_vectors", [](RunConfig& c, const std::string& v) { c.train.log.gradient_vectors = parse_bool(v); }},
      {"log.timing", [](RunConfig& c, const std::string& v) { c.train.log.timing = parse_bool(v); }},
      {"compare.sweep", [](RunConfig& c, const std::string& v) { c.compare.sweep = parse_bool(v); }},
      {"compare.sweep_points", [](RunConfig& c, const std::string& v) { c.compare.sweep_points = parse_small_int(v); }},
      {"compare.sweep_min", [](RunConfig& c, const std::string& v) { c.compare.sweep_min = parse_double(v); }},
      {"compare.sweep_max", [](RunConfig& c, const std::string& v) { c.compare.sweep_max = parse_double(v); }},
      {"compare.sweep_seeds", [](RunConfig& c, const std::string& v) { c.compare.sweep_seeds = parse_small_int(v); }},
      {"compare.outlier_rerun", [](RunConfig& c, const std::string& v) { c.compare.outlier_rerun = parse_bool(v); }},
  };
  return table;
}

void validate_compare(const CompareConfig& c) {
  if (c.sweep_points < 1) throw std::invalid_argument("config: compare.sweep_points must be >= 1");
  if (c.sweep_seeds < 1) throw std::invalid_argument("config: compare.sweep_seeds must be >= 1");
  if (!(c.sweep_min > 0.0) || !(c.sweep_max >= c.sweep_min)) {
    throw std::invalid_argument("config: need 0 < compare.sweep_min <= compare.sweep_max");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  bool bands_seen = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    auto fail = [&](const std::string& msg) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + msg);
    };
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("expected 'key = value'");
    if (!seen.insert(key).second) fail("duplicate key '" + key + "'");
    try {
      if (key.rfind("band.", 0) == 0 && key != "band.bonus") {
        const BandQuantity q = parse_band_quantity(key.substr(5));
        const int level = parse_small_int(value);
        if (level < 0 || level >= kNumBandLevels) {
          throw std::invalid_argument("band level must be in 0..4");
        }
        if (!bands_seen) cfg.train.env.bands.clear();
        bands_seen = true;
        cfg.train.env.bands.push_back({q, level});
        continue;
      }
      const auto it = setters().find(key);
      if (it == setters().end()) fail("unknown key '" + key + "'");
      it->second(cfg, value);
    } catch (const std::invalid_argument& e) {
      const std::string what = e.what();
      if (what.rfind("config line", 0) == 0) throw;
      fail(key + ": " + what);
    }
  }
  cfg.train.validate();
  validate_compare(cfg.compare);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string resolved_config_text(const RunConfig& config) {
  const TrainConfig& t = config.train;
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  auto d = [](double v) { return format_double(v); };
  std::string hidden;
  for (std::size_t i = 0; i < t.hidden.size(); ++i) {
    hidden += (i ? "," : "") + std::to_string(t.hidden[i]);
  }
  o << "algo = " << to_string(t.algo) << '\n'
    << "seed = " << t.seed << '\n'
    << "gamma = " << d(t.gamma) << '\n'
    << "gae_lambda = " << d(t.gae_lambda) << '\n'
    << "clip = " << d(t.clip) << '\n'
    << "entropy_coef = " << d(t.entropy_coef) << '\n'
    << "target_kl = " << d(t.target_kl) << '\n'
    << "learning_rate = " << d(t.learning_rate) << '\n'
    << "epochs = " << t.epochs << '\n'
    << "minibatches = " << t.minibatches << '\n'
    << "num_envs = " << t.num_envs << '\n'
    << "horizon = " << t.horizon << '\n'
    << "updates = " << t.updates << '\n'
    << "hidden = " << hidden << '\n'
    << "max_grad_norm = " << d(t.max_grad_norm) << '\n'
    << "symmetric_reference = "
    << (t.symmetric_reference == SymmetricReference::kOriginal ? "original" : "running") << '\n'
    << "project_entropy = " << b(t.project_entropy) << '\n'
    << "return_window = " << t.return_window << '\n'
    << "env.name = " << t.env.name << '\n'
    << "env.task_scale = " << d(t.env.task_scale) << '\n'
    << "env.penalty_scale = " << d(t.env.penalty_scale) << '\n'
    << "env.with_regulariser = " << b(t.env.with_regulariser) << '\n'
    << "env.episode_steps = " << t.env.episode_steps << '\n'
    << "band.bonus = " << d(t.env.band_bonus) << '\n';
  for (const auto& band : t.env.bands) {
    o << "band." << to_string(band.quantity) << " = " << band.level << '\n';
  }
  o << "log.cosine_cadence = " << t.log.cosine_cadence << '\n'
    << "log.gradient_vectors = " << b(t.log.gradient_vectors) << '\n'
    << "log.timing = " << b(t.log.timing) << '\n'
    << "compare.sweep = " << b(config.compare.sweep) << '\n'
    << "compare.sweep_points = " << config.compare.sweep_points << '\n'
    << "compare.sweep_min = " << d(config.compare.sweep_min) << '\n'
    << "compare.sweep_max = " << d(config.compare.sweep_max) << '\n'
    << "compare.sweep_seeds = " << config.compare.sweep_seeds << '\n'
    << "compare.outlier_rerun = " << b(config.compare.outlier_rerun) << '\n';
  return o.str();
}

}  // namespace gcr
