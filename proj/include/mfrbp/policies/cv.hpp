#pragma once

#include <cstddef>

#include "mfrbp/scene.hpp"

namespace mfrbp::policies {

/// Constant-velocity extrapolation from the last observed position using the
/// average velocity over the trailing `window_s`. Covariance is diagonal and
/// grows as (sigma0 * s * dt)^2 at step s.
TrajectoryGaussian cv_predict(const TrackHistory& target, std::size_t horizon_steps,
                              double sample_rate, double sigma0 = 0.5, double window_s = 1.0);

}  // namespace mfrbp::policies
