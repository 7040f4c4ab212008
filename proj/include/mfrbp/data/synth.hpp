#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "mfrbp/data/segments.hpp"
#include "mfrbp/scene.hpp"

namespace mfrbp::data {

/// Multi-lane platoon traffic. Each lane holds a platoon at a common initial
/// speed; the platoon leader may brake once, and followers respond to what
/// their leader did reaction_delay_s earlier:
///
///   a = k_speed * min(0, v_lead - v) + k_gap * min(0, gap - (reaction_gap_s * v + standstill_gap))
///
/// and otherwise recover towards min(desired speed, v_lead). Initial speeds
/// are multiples of rate/64 m/s and positions multiples of 1/64 m, so traffic
/// without braking or noise moves at exactly constant velocity.
struct SynthConfig {
  std::size_t scenes = 56;
  std::size_t lanes = 3;
  std::size_t vehicles_per_lane = 4;
  double min_speed = 8.0;   // m/s
  double max_speed = 16.0;  // m/s
  double braking_probability = 0.6;  // per platoon leader and scene
  double min_decel = 2.0;  // m/s^2
  double max_decel = 4.0;
  double min_brake_s = 1.0;
  double max_brake_s = 3.0;
  double reaction_gap_s = 1.5;
  double reaction_delay_s = 0.5;
  double initial_headway_s = 2.0;
  double standstill_gap = 5.0;  // m
  double k_speed = 1.2;         // 1/s
  double k_gap = 0.3;           // 1/s^2
  double recover_accel = 1.5;   // m/s^2
  double max_follower_decel = 9.0;
  double lane_width = 3.66;
  double noise_sigma = 0.05;  // m, on recorded positions
  double duration_s = 10.0;
  double sample_rate = 10.0;
  std::uint64_t seed = 1;

  std::size_t frames() const;
  std::size_t reaction_delay_frames() const;
  void validate() const;
};

struct BrakingEvent {
  AgentId leader = 0;
  Frame onset = 0;  // first frame whose speed reflects the deceleration
  Frame end = 0;    // first frame after the event
  double decel = 0.0;
};

struct SynthTraffic {
  std::vector<TrackHistory> tracks;  // recorded, with noise
  std::vector<TrackHistory> clean;   // noise-free ground state
  std::vector<BrakingEvent> events;
  std::map<AgentId, AgentId> leader_of;
};

/// Pure function of the config.
SynthTraffic synthesize_traffic(const SynthConfig& config);

inline constexpr const char* kSynthSubset = "synth";

/// Traffic split by vehicle (seeded by config.seed) and cut into segments.
Dataset synthesize_dataset(const SynthConfig& config, const SegmentConfig& segments);

}  // namespace mfrbp::data
