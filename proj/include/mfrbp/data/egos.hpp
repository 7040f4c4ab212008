#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "mfrbp/engine/sensor.hpp"
#include "mfrbp/scene.hpp"

namespace mfrbp::data {

struct EgoSample {
  /// Egos in the order they were drawn.
  std::vector<AgentId> egos;
  /// For each target, the ego whose filtered scene yields its evaluated
  /// prediction: the first drawn ego other than itself that has it in the
  /// core zone, or the target itself when no other ego does.
  std::map<AgentId, AgentId> evaluator;

  bool self_covered(AgentId target) const { return evaluator.at(target) == target; }
};

/// Greedy seeded cover: draw a random uncovered target, then among the
/// agents whose core zone contains it pick the one covering the most
/// uncovered targets (ties: not the target itself, then lowest id). Repeats
/// until every target lies in the core zone of some ego. Only agents in
/// `eligible` (all agents when null) may become egos, except that a target
/// no eligible agent covers becomes its own ego. `sensor.ego_id` is ignored;
/// range and periphery come from it.
EgoSample sample_egos(const SceneHistory& scene, const std::vector<AgentId>& targets,
                      const engine::SensorModel& sensor, std::uint64_t seed,
                      const std::set<AgentId>* eligible = nullptr);

/// True when every target is in the core zone of at least one sampled ego.
bool covers_all(const SceneHistory& scene, const std::vector<AgentId>& targets,
                const std::vector<AgentId>& egos, const engine::SensorModel& sensor);

}  // namespace mfrbp::data
