#include "mfrbp/policies/social_grid.hpp"

#include <cmath>
#include <string>

#include "mfrbp/error.hpp"

namespace mfrbp::policies {

std::optional<GridCell> grid_cell_for_offset(Vec2 offset, const CspConfig& config) {
  const auto center_row = static_cast<long long>(config.grid_rows / 2);
  const auto center_col = static_cast<long long>(config.grid_cols / 2);
  const double r = std::floor((offset.x + 0.5 * config.cell_length) / config.cell_length);
  const double c = std::floor((offset.y + 0.5 * config.cell_width) / config.cell_width);
  if (!std::isfinite(r) || !std::isfinite(c)) return std::nullopt;
  const long long row = center_row + static_cast<long long>(r);
  const long long col = center_col + static_cast<long long>(c);
  if (row < 0 || col < 0 || row >= static_cast<long long>(config.grid_rows) ||
      col >= static_cast<long long>(config.grid_cols)) {
    return std::nullopt;
  }
  return GridCell{static_cast<std::size_t>(row), static_cast<std::size_t>(col)};
}

std::vector<GridSlot> assign_grid(const SceneHistory& scene, AgentId target,
                                  const CspConfig& config) {
  const Vec2 origin = scene.track(target).last().position();
  const std::size_t cells = config.grid_rows * config.grid_cols;
  std::vector<std::optional<GridSlot>> best(cells);
  std::vector<double> best_dist(cells, 0.0);
  const double center_row = static_cast<double>(config.grid_rows / 2);
  const double center_col = static_cast<double>(config.grid_cols / 2);
  for (const auto& track : scene.tracks()) {
    if (track.id() == target) continue;
    const Vec2 offset = track.last().position() - origin;
    const auto cell = grid_cell_for_offset(offset, config);
    if (!cell) continue;
    const Vec2 center{(static_cast<double>(cell->row) - center_row) * config.cell_length,
                      (static_cast<double>(cell->col) - center_col) * config.cell_width};
    const Vec2 d = offset - center;
    const double dist = d.x * d.x + d.y * d.y;
    const std::size_t idx = cell->row * config.grid_cols + cell->col;
    // Tracks are visited in id order, so a strict comparison keeps the lower id on ties.
    if (!best[idx] || dist < best_dist[idx]) {
      best[idx] = GridSlot{track.id(), *cell};
      best_dist[idx] = dist;
    }
  }
  std::vector<GridSlot> slots;
  for (const auto& b : best) {
    if (b) slots.push_back(*b);
  }
  return slots;
}

std::size_t SocialGridTensor::occupied_count() const {
  std::size_t n = 0;
  for (const auto& o : occupants) n += o.has_value() ? 1 : 0;
  return n;
}

TargetFrame make_target_frame(const TrackHistory& target, const CspConfig& config) {
  TargetFrame frame;
  frame.origin = target.last().position();
  frame.velocity = velocity_estimate(target, config.sample_rate, config.cv_window_s);
  const std::size_t horizon = config.horizon_steps();
  const double dt = 1.0 / config.sample_rate;
  frame.anchor.reserve(horizon);
  for (std::size_t s = 1; s <= horizon; ++s) {
    const double t = static_cast<double>(s) * dt;
    frame.anchor.push_back({frame.velocity.x * t, frame.velocity.y * t});
  }
  return frame;
}

std::vector<Features> history_features(const TrackHistory& agent, const TargetFrame& frame,
                                       const CspConfig& config) {
  const auto states = agent.states();
  const std::size_t n = std::min(states.size(), config.history_steps());
  const std::size_t first = states.size() - n;
  std::vector<Features> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 p = states[first + k].position();
    Vec2 v = frame.velocity;
    if (states.size() >= 2) {
      const std::size_t a = first + k == 0 ? 0 : first + k - 1;
      const std::size_t b = first + k == 0 ? 1 : first + k;
      v = config.sample_rate * (states[b].position() - states[a].position());
    }
    const Vec2 rel = p - frame.origin;
    const Vec2 dv = v - frame.velocity;
    out[k] = {rel.x / config.position_scale, rel.y / config.position_scale,
              dv.x / config.velocity_scale, dv.y / config.velocity_scale};
  }
  return out;
}

std::vector<Features> future_features(const TrajectoryGaussian& future, Vec2 current_position,
                                      const TargetFrame& frame, const CspConfig& config) {
  if (future.horizon() != frame.anchor.size()) {
    throw Error("future of agent " + std::to_string(future.agent_id) + " has " +
                std::to_string(future.horizon()) + " steps, expected " +
                std::to_string(frame.anchor.size()));
  }
  std::vector<Features> out(future.horizon());
  Vec2 prev = current_position;
  for (std::size_t s = 0; s < future.horizon(); ++s) {
    const Vec2 mu = future.means[s];
    const Vec2 rel = mu - (frame.origin + frame.anchor[s]);
    const Vec2 dv = config.sample_rate * (mu - prev) - frame.velocity;
    out[s] = {rel.x / config.position_scale, rel.y / config.position_scale,
              dv.x / config.velocity_scale, dv.y / config.velocity_scale};
    prev = mu;
  }
  return out;
}

namespace {

SocialGridTensor empty_grid(const CspConfig& config) {
  return {nn::Tensor({config.encoder_hidden, config.grid_rows, config.grid_cols}),
          std::vector<std::optional<AgentId>>(config.grid_rows * config.grid_cols)};
}

void scatter(SocialGridTensor& grid, GridCell cell, AgentId agent,
             const std::vector<double>& encoding, const CspConfig& config) {
  if (encoding.size() != config.encoder_hidden) {
    throw ShapeError("grid encoder returned " + std::to_string(encoding.size()) +
                     " values, expected " + std::to_string(config.encoder_hidden));
  }
  const std::size_t plane = config.grid_rows * config.grid_cols;
  const std::size_t idx = cell.row * config.grid_cols + cell.col;
  for (std::size_t ch = 0; ch < encoding.size(); ++ch) grid.values[ch * plane + idx] = encoding[ch];
  grid.occupants[idx] = agent;
}

}  // namespace

SocialGridTensor build_history_grid(const SceneHistory& scene, AgentId target,
                                    const HistoryEncoder& encoder, const CspConfig& config) {
  auto grid = empty_grid(config);
  for (const auto& slot : assign_grid(scene, target, config)) {
    scatter(grid, slot.cell, slot.agent, encoder(scene.track(slot.agent)), config);
  }
  return grid;
}

FutureGridTensor build_future_grid(const SceneHistory& scene, AgentId target,
                                   const std::map<AgentId, TrajectoryGaussian>& predictions,
                                   const FutureEncoder& encoder, const CspConfig& config) {
  std::size_t horizon = 0;
  for (const auto& [id, p] : predictions) {
    if (horizon == 0) horizon = p.horizon();
    if (p.horizon() != horizon) {
      throw Error("neighbour predictions disagree on horizon length (" + std::to_string(horizon) +
                  " vs " + std::to_string(p.horizon()) + " for agent " + std::to_string(id) +
                  ")");
    }
  }
  auto grid = empty_grid(config);
  for (const auto& slot : assign_grid(scene, target, config)) {
    auto it = predictions.find(slot.agent);
    if (it == predictions.end()) continue;
    scatter(grid, slot.cell, slot.agent, encoder(slot.agent, it->second), config);
  }
  return grid;
}

}  // namespace mfrbp::policies
