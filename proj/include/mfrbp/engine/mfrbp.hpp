#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "mfrbp/engine/policy.hpp"
#include "mfrbp/scene.hpp"

namespace mfrbp::engine {

/// Reasoning level and policy ladder of one agent. ladder.size() must be
/// level + 1; ladder[0] is history-only, every higher rung future-conditional.
struct AgentLadder {
  std::size_t level = 0;
  std::vector<PolicyPtr> ladder;
};

struct ReasoningAssignment {
  std::map<AgentId, AgentLadder> agents;
  /// Level-0 predictions supplied from outside instead of running ladder[0]
  /// (e.g. an ego's planned trajectory).
  std::map<AgentId, TrajectoryGaussian> pinned_level0;

  std::size_t max_level() const;
  /// Throws unless every agent of `scene` (and no other) is assigned a valid
  /// ladder.
  void validate(const SceneHistory& scene) const;
};

/// Every prediction produced while running the recursion, by agent and level.
class LevelTrace {
 public:
  void record(AgentId agent, std::size_t level, TrajectoryGaussian prediction);

  bool contains(AgentId agent, std::size_t level) const;
  const TrajectoryGaussian& at(AgentId agent, std::size_t level) const;
  /// Number of levels recorded for `agent` (its k_i + 1 once complete).
  std::size_t levels(AgentId agent) const;
  const std::map<AgentId, std::vector<TrajectoryGaussian>>& entries() const { return entries_; }

 private:
  std::map<AgentId, std::vector<TrajectoryGaussian>> entries_;
};

struct MfrbpResult {
  ScenePrediction predictions;
  LevelTrace trace;
};

/// Level-0 pass for every agent, then for k = 1..max k_i each agent with
/// k <= k_i runs ladder[k] conditioned on every other agent j's level
/// min(k_j, k - 1) prediction. Returns each agent's level-k_i prediction.
MfrbpResult run_mfrbp(const SceneHistory& scene, const ReasoningAssignment& assignment);

}  // namespace mfrbp::engine
