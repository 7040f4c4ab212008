#include "mfrbp/engine/strategies.hpp"

#include <string>

#include "mfrbp/error.hpp"

namespace mfrbp::engine {

void SensorModel::validate() const {
  if (!(range > 0.0)) throw Error("sensor range must be positive");
  if (!(periphery_fraction > 0.0 && periphery_fraction < 1.0)) {
    throw Error("periphery fraction must lie in (0, 1)");
  }
}

SensorZone SensorModel::classify(double distance) const {
  if (distance > range) return SensorZone::OutOfRange;
  if (distance > core_radius()) return SensorZone::Peripheral;
  return SensorZone::Core;
}

SensorZone SensorModel::classify(Vec2 ego_position, Vec2 other_position) const {
  return classify((other_position - ego_position).norm());
}

namespace {

void require(const PolicyPtr& p, const char* what) {
  if (!p) throw Error(std::string("policy set has no ") + what + " policy");
}

}  // namespace

ReasoningAssignment make_l1_rbp(const SceneHistory& scene, const PolicySet& policies) {
  require(policies.csp, "CSP");
  require(policies.fccsp, "FC-CSP");
  ReasoningAssignment a;
  for (const auto& track : scene.tracks()) {
    a.agents[track.id()] = {1, {policies.csp, policies.fccsp}};
  }
  return a;
}

FilteredAssignment make_l1_mfrbp(const SceneHistory& scene, const SensorModel& sensor,
                                 const PolicySet& policies) {
  sensor.validate();
  require(policies.cv, "CV");
  require(policies.csp, "CSP");
  require(policies.fccsp, "FC-CSP");
  const TrackHistory* ego = scene.find(sensor.ego_id);
  if (ego == nullptr) {
    throw Error("ego agent " + std::to_string(sensor.ego_id) + " is not in the scene");
  }
  const Vec2 ego_pos = ego->last().position();
  std::vector<TrackHistory> kept;
  ReasoningAssignment a;
  for (const auto& track : scene.tracks()) {
    const auto zone = sensor.classify(ego_pos, track.last().position());
    if (track.id() != sensor.ego_id && zone == SensorZone::OutOfRange) continue;
    kept.push_back(track);
    if (track.id() != sensor.ego_id && zone == SensorZone::Peripheral) {
      a.agents[track.id()] = {0, {policies.cv}};
    } else {
      a.agents[track.id()] = {1, {policies.csp, policies.fccsp}};
    }
  }
  return {SceneHistory(std::move(kept), scene.sample_rate()), std::move(a)};
}

FilteredAssignment make_planning_aware(const SceneHistory& scene, const SensorModel& sensor,
                                       const std::vector<Vec2>& ego_future,
                                       std::size_t horizon_steps, const PolicySet& policies) {
  if (ego_future.size() != horizon_steps) {
    throw Error("ego plan has " + std::to_string(ego_future.size()) + " steps, horizon is " +
                std::to_string(horizon_steps));
  }
  auto out = make_l1_mfrbp(scene, sensor, policies);
  TrajectoryGaussian plan;
  plan.agent_id = sensor.ego_id;
  plan.means = ego_future;
  plan.covariances.assign(ego_future.size(), Cov2{});
  out.assignment.pinned_level0[sensor.ego_id] = std::move(plan);
  return out;
}

}  // namespace mfrbp::engine
