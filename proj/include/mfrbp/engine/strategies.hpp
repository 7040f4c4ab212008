#pragma once

#include "mfrbp/engine/mfrbp.hpp"
#include "mfrbp/engine/sensor.hpp"

namespace mfrbp::engine {

/// The policies the experiment strategies draw their ladders from.
struct PolicySet {
  PolicyPtr cv;
  PolicyPtr csp;
  PolicyPtr fccsp;
};

/// Every agent gets (k, ladder) = (1, CSP, FC-CSP).
ReasoningAssignment make_l1_rbp(const SceneHistory& scene, const PolicySet& policies);

struct FilteredAssignment {
  SceneHistory scene;
  ReasoningAssignment assignment;
};

/// Drops agents outside the ego's sensor range; peripheral agents get
/// (0, CV), everyone else including the ego (1, CSP, FC-CSP).
FilteredAssignment make_l1_mfrbp(const SceneHistory& scene, const SensorModel& sensor,
                                 const PolicySet& policies);

/// make_l1_mfrbp with the ego's level-0 slot pinned to `ego_future` (its
/// plan), carried with zero covariance.
FilteredAssignment make_planning_aware(const SceneHistory& scene, const SensorModel& sensor,
                                       const std::vector<Vec2>& ego_future,
                                       std::size_t horizon_steps, const PolicySet& policies);

}  // namespace mfrbp::engine
