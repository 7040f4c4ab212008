#include "mfrbp/engine/mfrbp.hpp"

#include <algorithm>
#include <string>

#include "mfrbp/error.hpp"

namespace mfrbp::engine {
namespace {

std::string agent_label(AgentId agent, std::size_t level) {
  return "agent " + std::to_string(agent) + " level " + std::to_string(level);
}

TrajectoryGaussian checked_call(const Policy& policy, const SceneHistory& scene, AgentId agent,
                                std::size_t level, const Conditioning* others) {
  TrajectoryGaussian out;
  try {
    out = policy.predict(scene, agent, others);
    out.validate();
  } catch (const std::exception& e) {
    throw Error(agent_label(agent, level) + " (" + policy.name() + "): " + e.what());
  }
  if (out.agent_id != agent) {
    throw Error(agent_label(agent, level) + " (" + policy.name() +
                "): prediction is tagged with agent " + std::to_string(out.agent_id));
  }
  return out;
}

}  // namespace

std::size_t ReasoningAssignment::max_level() const {
  std::size_t k = 0;
  for (const auto& [id, a] : agents) k = std::max(k, a.level);
  return k;
}

void ReasoningAssignment::validate(const SceneHistory& scene) const {
  for (const auto& track : scene.tracks()) {
    if (!agents.count(track.id())) {
      throw Error("no reasoning assignment for agent " + std::to_string(track.id()));
    }
  }
  for (const auto& [id, a] : agents) {
    if (!scene.contains(id)) {
      throw Error("assignment names agent " + std::to_string(id) + " which is not in the scene");
    }
    if (a.ladder.size() != a.level + 1) {
      throw Error("agent " + std::to_string(id) + " has level " + std::to_string(a.level) +
                  " but a ladder of " + std::to_string(a.ladder.size()) + " policies");
    }
    for (std::size_t k = 0; k < a.ladder.size(); ++k) {
      if (!a.ladder[k]) throw Error(agent_label(id, k) + ": missing policy");
      if (a.ladder[k]->future_conditional() != (k > 0)) {
        throw Error(agent_label(id, k) + ": " + a.ladder[k]->name() +
                    (k == 0 ? " is future-conditional and cannot run at level 0"
                            : " is history-only and cannot run above level 0"));
      }
    }
  }
  for (const auto& [id, pinned] : pinned_level0) {
    if (!agents.count(id)) {
      throw Error("pinned level-0 prediction for unknown agent " + std::to_string(id));
    }
    pinned.validate();
  }
}

void LevelTrace::record(AgentId agent, std::size_t level, TrajectoryGaussian prediction) {
  auto& levels = entries_[agent];
  if (levels.size() != level) {
    throw Error(agent_label(agent, level) + " recorded out of order");
  }
  levels.push_back(std::move(prediction));
}

bool LevelTrace::contains(AgentId agent, std::size_t level) const {
  auto it = entries_.find(agent);
  return it != entries_.end() && level < it->second.size();
}

const TrajectoryGaussian& LevelTrace::at(AgentId agent, std::size_t level) const {
  if (!contains(agent, level)) throw Error("no trace entry for " + agent_label(agent, level));
  return entries_.at(agent)[level];
}

std::size_t LevelTrace::levels(AgentId agent) const {
  auto it = entries_.find(agent);
  return it == entries_.end() ? 0 : it->second.size();
}

MfrbpResult run_mfrbp(const SceneHistory& scene, const ReasoningAssignment& assignment) {
  assignment.validate(scene);
  MfrbpResult result;
  auto& trace = result.trace;

  for (const auto& [id, a] : assignment.agents) {
    auto pinned = assignment.pinned_level0.find(id);
    if (pinned != assignment.pinned_level0.end()) {
      trace.record(id, 0, pinned->second);
    } else {
      trace.record(id, 0, checked_call(*a.ladder[0], scene, id, 0, nullptr));
    }
  }

  const std::size_t max_k = assignment.max_level();
  for (std::size_t k = 1; k <= max_k; ++k) {
    // Level k only reads levels below k, so every agent at this level sees
    // the same completed trace.
    std::map<AgentId, TrajectoryGaussian> level_k;
    for (const auto& [id, a] : assignment.agents) {
      if (k > a.level) continue;
      Conditioning others;
      for (const auto& [j, aj] : assignment.agents) {
        if (j == id) continue;
        others.emplace(j, trace.at(j, std::min(aj.level, k - 1)));
      }
      level_k.emplace(id, checked_call(*a.ladder[k], scene, id, k, &others));
    }
    for (auto& [id, p] : level_k) trace.record(id, k, std::move(p));
  }

  for (const auto& [id, a] : assignment.agents) {
    result.predictions.emplace(id, trace.at(id, a.level));
  }
  return result;
}

}  // namespace mfrbp::engine
