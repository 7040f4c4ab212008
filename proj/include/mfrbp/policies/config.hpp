#pragma once

#include <cstddef>
#include <cstdint>

namespace mfrbp::policies {

enum class PolicyKind { CV, CSP, FCCSP };

const char* to_string(PolicyKind kind);
inline bool is_future_conditional(PolicyKind kind) { return kind == PolicyKind::FCCSP; }

/// Architecture and rate configuration shared by CSP and FC-CSP. Defaults
/// follow the usual convolutional social pooling sizes; tests shrink the
/// hidden sizes.
struct CspConfig {
  std::size_t grid_rows = 13;
  std::size_t grid_cols = 3;
  double cell_length = 4.57;  // m, longitudinal
  double cell_width = 3.66;   // m, one lane

  std::size_t embed_size = 32;
  std::size_t encoder_hidden = 64;
  std::size_t dyn_embed_size = 32;
  std::size_t conv_filters = 64;
  std::size_t conv_kernel = 3;
  std::size_t pool_rows = 2;
  std::size_t decoder_hidden = 128;
  std::size_t num_modes = 6;

  double sample_rate = 10.0;  // Hz
  double leaky_slope = 0.1;

  double position_scale = 10.0;  // m, input/output normalisation
  double velocity_scale = 10.0;  // m/s

  double cv_window_s = 1.0;
  double cv_sigma0 = 0.5;  // m/s, CV covariance growth

  double lateral_threshold_lanes = 0.5;
  double braking_speed_ratio = 0.8;

  static constexpr double kHistorySeconds = 3.0;
  static constexpr double kHorizonSeconds = 5.0;
  static constexpr std::size_t kInputFeatures = 4;
  static constexpr std::size_t kOutputParams = 5;

  std::size_t history_steps() const;
  std::size_t horizon_steps() const;
  /// Rows/cols left after the valid convolution and row pooling.
  std::size_t pooled_rows() const;
  std::size_t pooled_cols() const;
  std::size_t social_features() const;
  /// Width of the context vector fed to the maneuver head and decoder.
  std::size_t context_size(bool with_future) const;

  /// Throws mfrbp::Error on an unusable configuration.
  void validate() const;

  /// Small sizes suitable for tests and desk-scale training.
  static CspConfig desk();
};

}  // namespace mfrbp::policies
