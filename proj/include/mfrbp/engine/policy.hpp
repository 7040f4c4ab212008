#pragma once

#include <map>
#include <memory>
#include <string>

#include "mfrbp/scene.hpp"

namespace mfrbp::engine {

/// Predictions of the other agents handed to a future-conditional policy.
using Conditioning = std::map<AgentId, TrajectoryGaussian>;

/// One rung of an agent's policy ladder.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual bool future_conditional() const = 0;

  /// `others` is null for history-only calls (level 0). The scene always
  /// includes the target's own history.
  virtual TrajectoryGaussian predict(const SceneHistory& scene, AgentId target,
                                     const Conditioning* others) const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

}  // namespace mfrbp::engine
