#include "gcr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gcr {

namespace {

using nlohmann::json;

constexpr std::size_t kNumProbes = 4;
constexpr std::uint64_t kProbeSeed = 20240917;

Tensor probe_inputs(std::size_t obs_dim) {
  Rng rng(kProbeSeed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t({kNumProbes, obs_dim});
  for (double& v : t.values()) v = u(rng);
  return t;
}

json params_to_json(const ParameterBlock& block) {
  json out = json::object();
  const auto& entries = block.layout().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out[entries[i].name] = block.tensors()[i].storage();
  }
  return out;
}

void params_from_json(const json& j, ParameterBlock& block, const char* what) {
  const auto& entries = block.layout().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!j.contains(entries[i].name)) {
      throw std::runtime_error(std::string("checkpoint: ") + what + " is missing '" +
                               entries[i].name + "'");
    }
    auto values = j.at(entries[i].name).get<std::vector<double>>();
    if (values.size() != entries[i].size) {
      throw std::runtime_error("checkpoint: parameter '" + entries[i].name +
                               "' has wrong length");
    }
    block.tensors()[i] = Tensor(entries[i].shape, std::move(values));
  }
  if (j.size() != entries.size()) {
    throw std::runtime_error(std::string("checkpoint: ") + what +
                             " has unexpected parameters");
  }
}

}  // namespace

std::string checkpoint_to_string(const RewardSpec& spec, const GaussianActor& actor,
                                 const MultiHeadCritic& critic) {
  critic.check_spec(spec);
  json doc;
  doc["format"] = "gcr-checkpoint";
  doc["version"] = kCheckpointVersion;
  json components = json::array();
  for (const auto& c : spec.components()) {
    components.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))},
                          {"scale", c.scale}});
  }
  doc["reward_spec"] = components;
  doc["architecture"] = {{"obs_dim", actor.obs_dim()},
                         {"act_dim", actor.act_dim()},
                         {"actor_hidden", actor.hidden()},
                         {"critic_hidden", critic.hidden()},
                         {"heads", critic.num_heads()},
                         {"activation", "tanh"}};
  doc["actor"] = params_to_json(actor);
  doc["critic"] = params_to_json(critic);
  const Tensor probes = probe_inputs(critic.obs_dim());
  const Tensor values = critic.values(probes);
  doc["probes"] = {{"obs", probes.storage()}, {"critic_values", values.storage()}};
  return doc.dump(1);
}

void save_checkpoint(const std::filesystem::path& path, const RewardSpec& spec,
                     const GaussianActor& actor, const MultiHeadCritic& critic) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(spec, actor, critic) << '\n';
}

Checkpoint checkpoint_from_string(const std::string& text) {
  const json doc = json::parse(text);
  if (doc.value("format", "") != "gcr-checkpoint") {
    throw std::runtime_error("checkpoint: not a gcr-checkpoint document");
  }
  if (doc.at("version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             doc.at("version").dump());
  }
  std::vector<RewardComponent> components;
  for (const auto& c : doc.at("reward_spec")) {
    components.push_back({c.at("name").get<std::string>(),
                          parse_component_kind(c.at("kind").get<std::string>()),
                          c.at("scale").get<double>()});
  }
  RewardSpec spec(std::move(components));
  const auto& arch = doc.at("architecture");
  GaussianActor actor(arch.at("obs_dim").get<std::size_t>(),
                      arch.at("act_dim").get<std::size_t>(),
                      arch.at("actor_hidden").get<std::vector<std::size_t>>(), 0);
  MultiHeadCritic critic(arch.at("obs_dim").get<std::size_t>(),
                         arch.at("critic_hidden").get<std::vector<std::size_t>>(), spec, 0);
  if (arch.at("heads").get<std::size_t>() != spec.size()) {
    throw std::runtime_error("checkpoint: head count does not match reward spec");
  }
  params_from_json(doc.at("actor"), actor, "actor");
  params_from_json(doc.at("critic"), critic, "critic");

  const auto& probes = doc.at("probes");
  Tensor obs({kNumProbes, critic.obs_dim()}, probes.at("obs").get<std::vector<double>>());
  const auto stored = probes.at("critic_values").get<std::vector<double>>();
  const Tensor values = critic.values(obs);
  if (stored.size() != values.size() ||
      std::memcmp(stored.data(), values.values().data(), stored.size() * sizeof(double)) != 0) {
    throw std::runtime_error("checkpoint: critic values on stored probes do not reproduce");
  }
  return Checkpoint{std::move(spec), std::move(actor), std::move(critic)};
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace gcr
