#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfrbp/nn/tensor.hpp"
#include "mfrbp/policies/config.hpp"
#include "mfrbp/scene.hpp"

// Convolutional social pooling (CSP) and its future-conditional extension
// (FC-CSP).
//
//   history branch: per-agent [pos, vel] -> FC + leaky -> LSTM encoder;
//                   neighbour encodings scattered into the social grid ->
//                   3x3 conv + leaky -> row max-pool
//   target branch:  target encoding -> FC + leaky ("dyn")
//   future branch:  (FC-CSP only) same layout as the history branch over the
//                   neighbours' predicted future means
//   context = [history pool, dyn, future pool]
//   maneuver head:  FC -> softmax over 6 classes (lateral x longitudinal)
//   decoder:        LSTM fed [context, one-hot maneuver] at every step ->
//                   FC -> (mu_x, mu_y, sigma_x, sigma_y, rho)
//
// Means are offsets from the target's constant-velocity anchor, scaled by
// position_scale, in the target-relative frame; sigma = exp(raw),
// rho = tanh(raw). Outputs are converted back to absolute coordinates.

namespace mfrbp::policies {

using NeighborFutures = std::map<AgentId, TrajectoryGaussian>;

/// Uniform(+-1/sqrt(fan_in)) initialisation, deterministic in `seed`.
nn::ParameterStore init_parameters(PolicyKind kind, const CspConfig& config, std::uint64_t seed);

/// Throws unless `params` holds every tensor `kind` needs with the right shape.
void check_parameters(PolicyKind kind, const nn::ParameterStore& params, const CspConfig& config);

/// Names of the tensors that exist only in FC-CSP.
std::vector<std::string> future_branch_parameter_names();

/// Zeroes the future branch and every weight column that reads the future
/// context, making FC-CSP collapse onto its history path.
void zero_future_branch(nn::ParameterStore& fccsp, const CspConfig& config);

/// Copies CSP weights into the shared slots of an FC-CSP store.
void copy_history_branch(const nn::ParameterStore& csp, nn::ParameterStore& fccsp,
                         const CspConfig& config);

MixturePrediction csp_forward(const SceneHistory& scene, AgentId target,
                              const nn::ParameterStore& params, const CspConfig& config);

MixturePrediction fccsp_forward(const SceneHistory& scene, AgentId target,
                                const NeighborFutures& neighbor_futures,
                                const nn::ParameterStore& params, const CspConfig& config);

/// Same result as select_top_mode() of the full forward, decoding one mode.
TrajectoryGaussian predict_top_mode(PolicyKind kind, const SceneHistory& scene, AgentId target,
                                    const NeighborFutures* neighbor_futures,
                                    const nn::ParameterStore& params, const CspConfig& config);

/// Maneuver class = lateral + 3 * longitudinal, lateral in {keep, left,
/// right}, longitudinal in {normal, braking}.
std::size_t label_maneuver(const TrackHistory& target, std::span<const Vec2> future,
                           const CspConfig& config);

struct LossTerms {
  double nll = 0.0;
  double maneuver = 0.0;
  double maneuver_weight = 1.0;
  double total() const { return nll + maneuver_weight * maneuver; }
};

/// Training loss for one target: Gaussian NLL of the decoded trajectory for
/// the true maneuver plus weighted maneuver cross-entropy. If grad_scale is
/// non-zero, grad_scale * dLoss/dparams is added to the store's gradients.
LossTerms model_loss(PolicyKind kind, const SceneHistory& scene, AgentId target,
                     const NeighborFutures* neighbor_futures, std::span<const Vec2> truth,
                     std::size_t maneuver, nn::ParameterStore& params, const CspConfig& config,
                     double maneuver_weight = 1.0, double grad_scale = 0.0);

}  // namespace mfrbp::policies
