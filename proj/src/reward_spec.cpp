#include "gcr/reward_spec.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace gcr {

std::string_view to_string(ComponentKind kind) {
  return kind == ComponentKind::kTask ? "task" : "regulariser";
}

ComponentKind parse_component_kind(std::string_view text) {
  if (text == "task") return ComponentKind::kTask;
  if (text == "regulariser") return ComponentKind::kRegulariser;
  throw std::invalid_argument("unknown component kind '" + std::string(text) +
                              "' (expected task or regulariser)");
}

RewardSpec::RewardSpec(std::vector<RewardComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw std::invalid_argument("reward spec needs at least one component");
  }
  std::set<std::string> seen;
  for (const auto& c : components_) {
    if (c.name.empty()) throw std::invalid_argument("reward component with empty name");
    if (!seen.insert(c.name).second) {
      throw std::invalid_argument("duplicate reward component '" + c.name + "'");
    }
    if (!std::isfinite(c.scale)) {
      throw std::invalid_argument("reward component '" + c.name + "' has non-finite scale");
    }
  }
}

std::vector<std::string> RewardSpec::names() const {
  std::vector<std::string> out;
  for (const auto& c : components_) out.push_back(c.name);
  return out;
}

std::vector<ComponentKind> RewardSpec::kinds() const {
  std::vector<ComponentKind> out;
  for (const auto& c : components_) out.push_back(c.kind);
  return out;
}

IndexSplit RewardSpec::split_indices() const {
  IndexSplit split;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    (components_[i].kind == ComponentKind::kTask ? split.task : split.regulariser)
        .push_back(i);
  }
  return split;
}

RewardSpec RewardSpec::scalarized() {
  return RewardSpec({RewardComponent{"total", ComponentKind::kTask, 1.0}});
}

}  // namespace gcr
