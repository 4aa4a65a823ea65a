#include "gcr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gcr {

std::optional<double> spc(double a, double b) {
  if (a + b == 0.0) return std::nullopt;
  return 100.0 * (b - a) / (0.5 * (a + b));
}

double avg_conflict(std::span<const double> counts) {
  if (counts.empty()) return 0.0;
  return std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
}

double binomial_upper_tail(std::size_t n, std::size_t k) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  // Work with log-binomials so large n does not overflow.
  double total = 0.0;
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  for (std::size_t i = k; i <= n; ++i) {
    const double log_c = std::lgamma(static_cast<double>(n) + 1.0) -
                         std::lgamma(static_cast<double>(i) + 1.0) -
                         std::lgamma(static_cast<double>(n - i) + 1.0);
    total += std::exp(log_c + log_half_n);
  }
  return std::min(total, 1.0);
}

WinRate win_rate(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("win_rate: paired lists differ in length");
  WinRate w;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) {
      ++w.wins;
    } else if (a[i] < b[i]) {
      ++w.losses;
    } else {
      ++w.ties;
    }
  }
  if (!a.empty()) {
    w.percent = 100.0 * (static_cast<double>(w.wins) + 0.5 * static_cast<double>(w.ties)) /
                static_cast<double>(a.size());
  }
  const std::size_t n = w.wins + w.losses;
  if (n > 0) {
    const double upper = binomial_upper_tail(n, w.wins);
    const double lower = 1.0 - binomial_upper_tail(n, w.wins + 1);
    w.p_one_sided = upper;
    w.p_two_sided = std::min(1.0, 2.0 * std::min(upper, lower));
  }
  return w;
}

std::vector<double> cosine_matrix(const std::vector<std::vector<double>>& vectors) {
  const std::size_t k = vectors.size();
  std::vector<double> norms(k);
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (double v : vectors[i]) s += v * v;
    norms[i] = std::sqrt(s);
  }
  std::vector<double> out(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (norms[i] == 0.0 || norms[j] == 0.0) continue;
      if (i == j) {
        out[i * k + j] = 1.0;
        continue;
      }
      if (vectors[i].size() != vectors[j].size()) {
        throw std::invalid_argument("cosine_matrix: vectors differ in length");
      }
      double d = 0.0;
      for (std::size_t t = 0; t < vectors[i].size(); ++t) d += vectors[i][t] * vectors[j][t];
      out[i * k + j] = d / (norms[i] * norms[j]);
    }
  }
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman: need two equal-length lists of at least 2 values");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

MetricsCsvWriter::MetricsCsvWriter(const std::filesystem::path& path, const RewardSpec& env_spec)
    : out_(path) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out_ << header(env_spec) << '\n';
}

std::string MetricsCsvWriter::header(const RewardSpec& env_spec) {
  std::string h = "update,mean_return";
  for (const auto& c : env_spec.components()) h += ",return_" + c.name;
  h += ",loss_surrogate_sum,loss_value,entropy,kl,lr,conflict_count,t_collect_s,t_update_s,"
       "t_project_s";
  return h;
}

std::string MetricsCsvWriter::row(const UpdateRecord& rec) {
  std::string r = std::to_string(rec.update) + "," + format_double(rec.mean_return);
  for (double v : rec.component_returns) r += "," + format_double(v);
  for (double v : {rec.loss_surrogate_sum, rec.loss_value, rec.entropy, rec.kl, rec.lr,
                   rec.conflict_count, rec.t_collect_s, rec.t_update_s, rec.t_project_s}) {
    r += "," + format_double(v);
  }
  return r;
}

void MetricsCsvWriter::write(const UpdateRecord& rec) {
  out_ << row(rec) << '\n';
  out_.flush();
}

CosineLogWriter::CosineLogWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void CosineLogWriter::write(const CosineSnapshot& snap) {
  out_ << cosine_snapshot_to_json(snap) << '\n';
  out_.flush();
}

std::string cosine_snapshot_to_json(const CosineSnapshot& snap) {
  nlohmann::json j;
  j["update"] = snap.update;
  j["num_components"] = snap.num_components;
  j["cosine"] = snap.cosine;
  if (!snap.gradients.empty()) j["gradients"] = snap.gradients;
  if (!snap.final_gradient.empty()) j["final_gradient"] = snap.final_gradient;
  return j.dump();
}

std::vector<CosineSnapshot> read_cosine_history(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<CosineSnapshot> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    CosineSnapshot s;
    s.update = j.at("update").get<int>();
    s.num_components = j.at("num_components").get<std::size_t>();
    s.cosine = j.at("cosine").get<std::vector<double>>();
    if (j.contains("gradients")) s.gradients = j["gradients"].get<std::vector<std::vector<double>>>();
    if (j.contains("final_gradient")) s.final_gradient = j["final_gradient"].get<std::vector<double>>();
    if (s.cosine.size() != s.num_components * s.num_components) {
      throw std::runtime_error("cosine history: matrix size does not match component count");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("csv: no column named " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

CsvTable read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
  };
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty csv");
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split(line);
    if (parts.size() != t.columns.size()) {
      throw std::runtime_error(path.string() + ": ragged csv row");
    }
    std::vector<double> row;
    row.reserve(parts.size());
    for (const auto& p : parts) row.push_back(p == "nan" ? std::nan("") : std::stod(p));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace gcr
