#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfrbp/scene.hpp"

namespace mfrbp::data {

struct SegmentConfig {
  double sample_rate = 10.0;
  double history_s = 3.0;
  double horizon_s = 5.0;
  double stride_s = 1.0;

  std::size_t history_steps() const;
  std::size_t horizon_steps() const;
  std::size_t stride_steps() const;
  std::size_t window_steps() const { return history_steps() + horizon_steps(); }
  void validate() const;
};

/// One 8 s window: the target's history ends at `frame`, its future covers
/// frame + 1 ... frame + horizon.
struct Segment {
  std::string subset;
  AgentId target = 0;
  Frame frame = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
  friend auto operator<=>(const Segment&, const Segment&) = default;
};

/// Number of full windows in a contiguous track of `frames` frames.
std::size_t window_count(std::size_t frames, const SegmentConfig& config);

/// Sliding windows over one contiguous track, oldest first.
std::vector<Segment> segment_track(const TrackHistory& track, const std::string& subset,
                                   const SegmentConfig& config);

/// All tracks of one recording, indexed for scene and future lookups.
class TrackSet {
 public:
  TrackSet() = default;
  explicit TrackSet(std::vector<TrackHistory> tracks);

  const std::vector<TrackHistory>& tracks() const { return tracks_; }
  std::vector<AgentId> vehicle_ids() const;

  /// The run of `agent` containing frames first..last, if any.
  const TrackHistory* covering(AgentId agent, Frame first, Frame last) const;

  /// Every agent observed over the `history_steps` frames ending at `frame`,
  /// each clipped to that window.
  SceneHistory scene_at(Frame frame, std::size_t history_steps, double sample_rate) const;

  /// Positions of `agent` over frame + 1 ... frame + horizon_steps, or
  /// nullopt when not fully observed.
  std::optional<std::vector<Vec2>> future(AgentId agent, Frame frame,
                                          std::size_t horizon_steps) const;

 private:
  std::vector<TrackHistory> tracks_;
  std::map<AgentId, std::vector<std::size_t>> runs_;
};

struct Dataset {
  SegmentConfig segments;
  std::map<std::string, TrackSet> subsets;
  std::vector<Segment> train;
  std::vector<Segment> test;

  const TrackSet& subset(const std::string& name) const;
};

/// Split every subset by vehicle, then cut each vehicle's runs into segments.
Dataset build_dataset(std::map<std::string, std::vector<TrackHistory>> tracks,
                      const SegmentConfig& config, std::uint64_t split_seed);

/// Segments sharing one scene: same subset and present frame.
struct SceneGroup {
  std::string subset;
  Frame frame = 0;
  SceneHistory scene;
  struct Target {
    AgentId agent = 0;
    std::vector<Vec2> future;
  };
  std::vector<Target> targets;
};

/// Groups segments by (subset, frame), ordered by that key; targets within
/// a group are ordered by id.
std::vector<SceneGroup> group_segments(const Dataset& dataset,
                                       const std::vector<Segment>& segments);

// Dataset directory layout:
//   dataset.json     format tag, version, segment config, segment lists
//   <subset>.tracks  tracks in the columnar trajectory format (meters)
inline constexpr int kDatasetVersion = 1;

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace mfrbp::data
