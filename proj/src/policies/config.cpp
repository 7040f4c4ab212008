#include "mfrbp/policies/config.hpp"

#include <cmath>
#include <string>

#include "mfrbp/error.hpp"

namespace mfrbp::policies {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::CV:
      return "CV";
    case PolicyKind::CSP:
      return "CSP";
    case PolicyKind::FCCSP:
      return "FC-CSP";
  }
  return "?";
}

namespace {

std::size_t steps_for(double seconds, double rate) {
  const double steps = seconds * rate;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 || rounded < 1.0) {
    throw Error("sample rate " + std::to_string(rate) + " Hz does not give a whole number of " +
                "steps in " + std::to_string(seconds) + " s");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

std::size_t CspConfig::history_steps() const { return steps_for(kHistorySeconds, sample_rate); }
std::size_t CspConfig::horizon_steps() const { return steps_for(kHorizonSeconds, sample_rate); }

std::size_t CspConfig::pooled_rows() const { return (grid_rows - conv_kernel + 1) / pool_rows; }
std::size_t CspConfig::pooled_cols() const { return grid_cols - conv_kernel + 1; }

std::size_t CspConfig::social_features() const {
  return conv_filters * pooled_rows() * pooled_cols();
}

std::size_t CspConfig::context_size(bool with_future) const {
  return social_features() * (with_future ? 2 : 1) + dyn_embed_size;
}

void CspConfig::validate() const {
  if (grid_rows == 0 || grid_cols == 0 || embed_size == 0 || encoder_hidden == 0 ||
      dyn_embed_size == 0 || conv_filters == 0 || decoder_hidden == 0 || conv_kernel == 0 ||
      pool_rows == 0) {
    throw Error("model sizes must all be at least 1");
  }
  if (num_modes != 6) throw Error("the maneuver head has exactly 6 modes");
  if (conv_kernel > grid_rows || conv_kernel > grid_cols) {
    throw Error("convolution kernel does not fit the social grid");
  }
  if (grid_rows - conv_kernel + 1 < pool_rows) throw Error("pooling window exceeds conv output");
  if (!(cell_length > 0.0) || !(cell_width > 0.0)) throw Error("grid cells must be positive");
  if (!(position_scale > 0.0) || !(velocity_scale > 0.0)) throw Error("scales must be positive");
  if (!(cv_window_s > 0.0) || !(cv_sigma0 >= 0.0)) throw Error("invalid CV settings");
  if (!(sample_rate > 0.0)) throw Error("sample rate must be positive");
  (void)history_steps();
  (void)horizon_steps();
}

CspConfig CspConfig::desk() {
  CspConfig c;
  c.embed_size = 8;
  c.encoder_hidden = 16;
  c.dyn_embed_size = 16;
  c.conv_filters = 8;
  c.decoder_hidden = 16;
  return c;
}

}  // namespace mfrbp::policies
