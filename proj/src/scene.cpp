#include "mfrbp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "mfrbp/error.hpp"

namespace mfrbp {

double Vec2::norm() const { return std::hypot(x, y); }

bool Cov2::valid() const {
  return std::isfinite(xx) && std::isfinite(xy) && std::isfinite(yy) && xx >= 0.0 &&
         yy >= 0.0 && det() >= -1e-12 * std::max(1.0, xx * yy);
}

TrackHistory::TrackHistory(AgentId id, std::vector<AgentState> states)
    : id_(id), states_(std::move(states)) {
  if (states_.empty()) {
    throw Error("track " + std::to_string(id_) + " is empty");
  }
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const auto& s = states_[i];
    if (s.frame < 0 || !std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw Error("track " + std::to_string(id_) + " has an invalid state at index " +
                  std::to_string(i));
    }
    if (i > 0 && s.frame != states_[i - 1].frame + 1) {
      throw Error("track " + std::to_string(id_) + " frames are not contiguous at frame " +
                  std::to_string(s.frame));
    }
  }
}

TrackHistory TrackHistory::truncated_to(Frame frame) const {
  if (frame < first_frame()) {
    throw Error("track " + std::to_string(id_) + " has no state at or before frame " +
                std::to_string(frame));
  }
  auto count = static_cast<std::size_t>(std::min(frame, last_frame()) - first_frame() + 1);
  return TrackHistory(id_, {states_.begin(), states_.begin() + count});
}

TrackHistory TrackHistory::tail(std::size_t count) const {
  count = std::min(count, states_.size());
  return TrackHistory(id_, {states_.end() - count, states_.end()});
}

SceneHistory::SceneHistory(std::vector<TrackHistory> tracks, double sample_rate)
    : tracks_(std::move(tracks)), sample_rate_(sample_rate) {
  if (!(sample_rate_ > 0.0)) throw Error("sample rate must be positive");
  if (tracks_.empty()) throw Error("scene has no tracks");
  std::sort(tracks_.begin(), tracks_.end(),
            [](const TrackHistory& a, const TrackHistory& b) { return a.id() < b.id(); });
  for (std::size_t i = 1; i < tracks_.size(); ++i) {
    if (tracks_[i].id() == tracks_[i - 1].id()) {
      throw Error("duplicate agent id " + std::to_string(tracks_[i].id()));
    }
  }
  current_frame_ = tracks_.front().last_frame();
  for (const auto& t : tracks_) {
    if (t.last_frame() != current_frame_) {
      throw Error("track " + std::to_string(t.id()) + " ends at frame " +
                  std::to_string(t.last_frame()) + ", scene is at frame " +
                  std::to_string(current_frame_));
    }
  }
}

const TrackHistory* SceneHistory::find(AgentId id) const {
  auto it = std::lower_bound(tracks_.begin(), tracks_.end(), id,
                             [](const TrackHistory& t, AgentId v) { return t.id() < v; });
  return it != tracks_.end() && it->id() == id ? &*it : nullptr;
}

const TrackHistory& SceneHistory::track(AgentId id) const {
  const auto* t = find(id);
  if (t == nullptr) throw Error("agent " + std::to_string(id) + " is not in the scene");
  return *t;
}

std::vector<AgentId> SceneHistory::agent_ids() const {
  std::vector<AgentId> ids;
  ids.reserve(tracks_.size());
  for (const auto& t : tracks_) ids.push_back(t.id());
  return ids;
}

SceneHistory build_scene(std::vector<TrackHistory> tracks, double sample_rate) {
  if (tracks.empty()) throw Error("cannot build a scene from zero tracks");
  std::set<AgentId> seen;
  Frame common_end = std::numeric_limits<Frame>::max();
  Frame latest_start = std::numeric_limits<Frame>::min();
  for (const auto& t : tracks) {
    if (!seen.insert(t.id()).second) {
      throw Error("duplicate agent id " + std::to_string(t.id()));
    }
    common_end = std::min(common_end, t.last_frame());
    latest_start = std::max(latest_start, t.first_frame());
  }
  if (latest_start > common_end) throw Error("tracks share no common frame");
  std::vector<TrackHistory> aligned;
  aligned.reserve(tracks.size());
  for (const auto& t : tracks) aligned.push_back(t.truncated_to(common_end));
  return SceneHistory(std::move(aligned), sample_rate);
}

void TrajectoryGaussian::validate() const {
  if (means.empty()) throw Error("trajectory prediction is empty");
  if (means.size() != covariances.size()) {
    throw Error("trajectory prediction has " + std::to_string(means.size()) + " means but " +
                std::to_string(covariances.size()) + " covariances");
  }
  for (std::size_t s = 0; s < means.size(); ++s) {
    if (!std::isfinite(means[s].x) || !std::isfinite(means[s].y)) {
      throw Error("non-finite mean at step " + std::to_string(s));
    }
    if (!covariances[s].valid()) throw Error("invalid covariance at step " + std::to_string(s));
  }
}

void MixturePrediction::validate() const {
  if (modes.empty() || modes.size() > kMaxModes) {
    throw Error("mixture must have 1.." + std::to_string(kMaxModes) + " modes, got " +
                std::to_string(modes.size()));
  }
  double total = 0.0;
  for (const auto& m : modes) {
    if (!(m.weight >= 0.0)) throw Error("negative mixture weight");
    total += m.weight;
    m.trajectory.validate();
  }
  if (std::abs(total - 1.0) > 1e-6) throw Error("mixture weights do not sum to 1");
}

Vec2 velocity_estimate(const TrackHistory& track, double sample_rate, double window_s) {
  if (track.size() < 2) throw Error("insufficient history");
  if (!(window_s > 0.0) || !(sample_rate > 0.0)) {
    throw Error("velocity window and sample rate must be positive");
  }
  auto window_frames = static_cast<std::size_t>(std::llround(window_s * sample_rate));
  std::size_t steps = std::clamp<std::size_t>(window_frames, 1, track.size() - 1);
  const auto& end = track.last();
  const auto& start = track.states()[track.size() - 1 - steps];
  double elapsed = static_cast<double>(steps) / sample_rate;
  return {(end.x - start.x) / elapsed, (end.y - start.y) / elapsed};
}

std::size_t top_mode_index(std::span<const double> weights) {
  std::size_t best = 0;
  for (std::size_t m = 1; m < weights.size(); ++m) {
    if (weights[m] > weights[best]) best = m;
  }
  return best;
}

const TrajectoryGaussian& select_top_mode(const MixturePrediction& prediction) {
  if (prediction.modes.empty()) throw Error("mixture has no modes");
  std::vector<double> w;
  w.reserve(prediction.modes.size());
  for (const auto& m : prediction.modes) w.push_back(m.weight);
  return prediction.modes[top_mode_index(w)].trajectory;
}

}  // namespace mfrbp
