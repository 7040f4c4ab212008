#pragma once

#include "mfrbp/scene.hpp"

namespace mfrbp::engine {

enum class SensorZone { Core, Peripheral, OutOfRange };

/// Ego-centred sensing disc. Agents farther than `range` are invisible;
/// those in the outer `periphery_fraction` band are peripheral.
struct SensorModel {
  AgentId ego_id = 0;
  double range = 60.0;
  double periphery_fraction = 0.25;

  void validate() const;
  double core_radius() const { return (1.0 - periphery_fraction) * range; }
  SensorZone classify(double distance) const;
  SensorZone classify(Vec2 ego_position, Vec2 other_position) const;
};

}  // namespace mfrbp::engine
