#include "mfrbp/policies/cv.hpp"

#include "mfrbp/error.hpp"

namespace mfrbp::policies {

TrajectoryGaussian cv_predict(const TrackHistory& target, std::size_t horizon_steps,
                              double sample_rate, double sigma0, double window_s) {
  if (horizon_steps == 0) throw Error("horizon must be at least one step");
  const Vec2 v = velocity_estimate(target, sample_rate, window_s);
  const Vec2 p = target.last().position();
  const double dt = 1.0 / sample_rate;
  TrajectoryGaussian out;
  out.agent_id = target.id();
  out.means.reserve(horizon_steps);
  out.covariances.reserve(horizon_steps);
  for (std::size_t s = 1; s <= horizon_steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    // (s * v) / rate rather than v * t: exact whenever the per-step
    // displacement is representable, which keeps CV traffic error-free.
    const double n = static_cast<double>(s);
    out.means.push_back({p.x + (v.x * n) / sample_rate, p.y + (v.y * n) / sample_rate});
    const double sd = sigma0 * t;
    out.covariances.push_back(Cov2::diagonal(sd * sd, sd * sd));
  }
  return out;
}

}  // namespace mfrbp::policies
