#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "mfrbp/nn/tensor.hpp"
#include "mfrbp/policies/config.hpp"
#include "mfrbp/scene.hpp"

namespace mfrbp::policies {

struct GridCell {
  std::size_t row = 0;  // longitudinal, increasing ahead of the target
  std::size_t col = 0;  // lateral, increasing with y
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Cell of a neighbour at `offset` (neighbour minus target, metres) in the
/// target-centred grid, or nullopt when outside it.
std::optional<GridCell> grid_cell_for_offset(Vec2 offset, const CspConfig& config);

struct GridSlot {
  AgentId agent = 0;
  GridCell cell;
};

/// Neighbours placed in the grid by current position, at most one per cell
/// (closest to the cell centre, then lowest id). Ordered by cell index.
std::vector<GridSlot> assign_grid(const SceneHistory& scene, AgentId target,
                                  const CspConfig& config);

/// [encoder_hidden, rows, cols] pooled encodings; unoccupied cells are zero.
struct SocialGridTensor {
  nn::Tensor values;
  std::vector<std::optional<AgentId>> occupants;  // rows * cols, row-major

  std::size_t occupied_count() const;
  std::optional<AgentId> at(GridCell cell, std::size_t cols) const {
    return occupants[cell.row * cols + cell.col];
  }
};
using FutureGridTensor = SocialGridTensor;

/// Target-relative reference frame: origin at the target's last position,
/// reference velocity from its recent history, and the constant-velocity
/// anchor offsets for every future step.
struct TargetFrame {
  Vec2 origin;
  Vec2 velocity;
  std::vector<Vec2> anchor;
};

TargetFrame make_target_frame(const TrackHistory& target, const CspConfig& config);

using Features = std::array<double, CspConfig::kInputFeatures>;

/// Per-step encoder inputs for a history: position relative to the target
/// origin and velocity relative to the target's reference velocity, both
/// normalised. Uses at most history_steps trailing states.
std::vector<Features> history_features(const TrackHistory& agent, const TargetFrame& frame,
                                       const CspConfig& config);

/// Per-step encoder inputs for a predicted future: mean position relative to
/// the target's constant-velocity anchor, and velocity relative to the
/// target's reference velocity.
std::vector<Features> future_features(const TrajectoryGaussian& future, Vec2 current_position,
                                      const TargetFrame& frame, const CspConfig& config);

using HistoryEncoder = std::function<std::vector<double>(const TrackHistory& neighbor)>;
using FutureEncoder =
    std::function<std::vector<double>(AgentId neighbor, const TrajectoryGaussian& future)>;

SocialGridTensor build_history_grid(const SceneHistory& scene, AgentId target,
                                    const HistoryEncoder& encoder, const CspConfig& config);

/// Places each neighbour's encoded predicted future at the cell of its
/// current position. Neighbours without a prediction leave their cell empty.
FutureGridTensor build_future_grid(const SceneHistory& scene, AgentId target,
                                   const std::map<AgentId, TrajectoryGaussian>& predictions,
                                   const FutureEncoder& encoder, const CspConfig& config);

}  // namespace mfrbp::policies
