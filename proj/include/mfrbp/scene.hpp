#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace mfrbp {

using AgentId = std::int64_t;
using Frame = std::int64_t;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  double norm() const;
};

/// Positional state of one agent at one tick. x is longitudinal, y lateral,
/// both in meters.
struct AgentState {
  double x = 0.0;
  double y = 0.0;
  Frame frame = 0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

/// Symmetric 2x2 covariance (m^2).
struct Cov2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static Cov2 diagonal(double var_x, double var_y) { return {var_x, 0.0, var_y}; }
  static Cov2 from_sigma_rho(double sigma_x, double sigma_y, double rho) {
    return {sigma_x * sigma_x, rho * sigma_x * sigma_y, sigma_y * sigma_y};
  }
  double det() const { return xx * yy - xy * xy; }
  bool valid() const;
  friend bool operator==(const Cov2&, const Cov2&) = default;
};

/// Contiguous state history of a single agent; frames increase by exactly 1.
class TrackHistory {
 public:
  TrackHistory(AgentId id, std::vector<AgentState> states);

  AgentId id() const { return id_; }
  std::span<const AgentState> states() const { return states_; }
  std::size_t size() const { return states_.size(); }
  const AgentState& last() const { return states_.back(); }
  Frame first_frame() const { return states_.front().frame; }
  Frame last_frame() const { return states_.back().frame; }

  /// Drops every state after `frame`. Throws if nothing would remain.
  TrackHistory truncated_to(Frame frame) const;
  /// Keeps the trailing `count` states (or all of them if fewer).
  TrackHistory tail(std::size_t count) const;

  friend bool operator==(const TrackHistory&, const TrackHistory&) = default;

 private:
  AgentId id_;
  std::vector<AgentState> states_;
};

/// The set of agent histories on a shared clock. Tracks are kept sorted by
/// id, and all of them end at current_frame().
class SceneHistory {
 public:
  SceneHistory(std::vector<TrackHistory> tracks, double sample_rate);

  Frame current_frame() const { return current_frame_; }
  double sample_rate() const { return sample_rate_; }
  double dt() const { return 1.0 / sample_rate_; }
  const std::vector<TrackHistory>& tracks() const { return tracks_; }
  std::size_t size() const { return tracks_.size(); }

  const TrackHistory* find(AgentId id) const;
  const TrackHistory& track(AgentId id) const;
  bool contains(AgentId id) const { return find(id) != nullptr; }
  std::vector<AgentId> agent_ids() const;

  friend bool operator==(const SceneHistory&, const SceneHistory&) = default;

 private:
  std::vector<TrackHistory> tracks_;
  Frame current_frame_ = 0;
  double sample_rate_ = 0.0;
};

/// Validates ids, truncates every track to the latest common frame.
SceneHistory build_scene(std::vector<TrackHistory> tracks, double sample_rate);

/// Gaussian over a future trajectory: one mean and one covariance per
/// future tick t+1 ... t_f.
struct TrajectoryGaussian {
  AgentId agent_id = 0;
  std::vector<Vec2> means;
  std::vector<Cov2> covariances;

  std::size_t horizon() const { return means.size(); }
  void validate() const;
  friend bool operator==(const TrajectoryGaussian&, const TrajectoryGaussian&) = default;
};

struct MixtureMode {
  double weight = 0.0;
  TrajectoryGaussian trajectory;
};

struct MixturePrediction {
  static constexpr std::size_t kMaxModes = 6;
  std::vector<MixtureMode> modes;

  void validate() const;
};

using ScenePrediction = std::map<AgentId, TrajectoryGaussian>;

/// Mean velocity over the trailing `window_s` seconds, clipped to the
/// available history.
Vec2 velocity_estimate(const TrackHistory& track, double sample_rate, double window_s = 1.0);

/// Highest-weight mode; ties go to the lowest index.
const TrajectoryGaussian& select_top_mode(const MixturePrediction& prediction);
std::size_t top_mode_index(std::span<const double> weights);

}  // namespace mfrbp
