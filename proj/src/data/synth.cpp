#include "mfrbp/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mfrbp/error.hpp"

namespace mfrbp::data {
namespace {

constexpr double kGridPerMeter = 64.0;
constexpr Frame kSceneSpacing = 100;  // idle frames between scenes

double quantize(double v, double step) { return std::round(v / step) * step; }

struct Vehicle {
  AgentId id = 0;
  double desired_speed = 0.0;
  std::vector<double> x;
  std::vector<double> v;
};

}  // namespace

std::size_t SynthConfig::frames() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate));
}

std::size_t SynthConfig::reaction_delay_frames() const {
  return static_cast<std::size_t>(std::llround(reaction_delay_s * sample_rate));
}

void SynthConfig::validate() const {
  if (scenes == 0 || lanes == 0 || vehicles_per_lane == 0) {
    throw Error("synthetic traffic needs at least one scene, lane and vehicle");
  }
  if (lanes > 9 || vehicles_per_lane > 9) throw Error("at most 9 lanes and 9 vehicles per lane");
  if (!(min_speed > 0.0) || !(max_speed >= min_speed)) throw Error("invalid speed range");
  if (!(braking_probability >= 0.0 && braking_probability <= 1.0)) {
    throw Error("braking probability must lie in [0, 1]");
  }
  if (!(min_decel > 0.0) || !(max_decel >= min_decel) || !(min_brake_s > 0.0) ||
      !(max_brake_s >= min_brake_s)) {
    throw Error("invalid braking event ranges");
  }
  if (!(reaction_gap_s > 0.0) || !(reaction_delay_s >= 0.0) || !(standstill_gap >= 0.0)) {
    throw Error("invalid reaction settings");
  }
  if (!(initial_headway_s > reaction_gap_s)) {
    throw Error("initial headway must exceed the reaction gap");
  }
  if (!(noise_sigma >= 0.0) || !(sample_rate > 0.0) || !(lane_width > 0.0)) {
    throw Error("invalid noise, rate or lane width");
  }
  if (frames() < 2) throw Error("scene duration too short");
}

SynthTraffic synthesize_traffic(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::mt19937_64 noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  const std::size_t n = config.frames();
  const double rate = config.sample_rate;
  const std::size_t delay = config.reaction_delay_frames();
  const double speed_step = rate / kGridPerMeter;
  const double pos_step = 1.0 / kGridPerMeter;

  SynthTraffic out;
  for (std::size_t scene = 0; scene < config.scenes; ++scene) {
    const Frame base = static_cast<Frame>(scene) * (static_cast<Frame>(n) + kSceneSpacing);
    for (std::size_t lane = 0; lane < config.lanes; ++lane) {
      const double y = static_cast<double>(lane) * config.lane_width;
      const double speed = std::max(speed_step, quantize(uniform(config.min_speed, config.max_speed), speed_step));
      std::vector<Vehicle> platoon(config.vehicles_per_lane);
      double x = quantize(uniform(0.0, 40.0), pos_step);
      for (std::size_t i = 0; i < platoon.size(); ++i) {
        auto& veh = platoon[i];
        veh.id = static_cast<AgentId>(scene * 100 + lane * 10 + i + 1);
        veh.desired_speed = speed;
        if (i > 0) {
          const double gap = config.initial_headway_s * speed + config.standstill_gap +
                             uniform(0.0, 5.0);
          x = quantize(x - gap, pos_step);
          out.leader_of[veh.id] = platoon[i - 1].id;
        }
        veh.x.assign(n, 0.0);
        veh.v.assign(n, 0.0);
        veh.x[0] = x;
        veh.v[0] = speed;
      }

      std::size_t brake_start = n, brake_end = n;
      double decel = 0.0;
      if (uniform(0.0, 1.0) < config.braking_probability) {
        brake_start = static_cast<std::size_t>(uniform(0.2, 0.6) * static_cast<double>(n));
        const auto len = static_cast<std::size_t>(
            std::llround(uniform(config.min_brake_s, config.max_brake_s) * rate));
        brake_end = std::min(n, brake_start + std::max<std::size_t>(len, 1));
        decel = uniform(config.min_decel, config.max_decel);
        out.events.push_back({platoon[0].id, base + static_cast<Frame>(brake_start) + 1,
                              base + static_cast<Frame>(brake_end) + 1, decel});
      }

      for (std::size_t f = 1; f < n; ++f) {
        const std::size_t prev = f - 1;
        const std::size_t seen = prev >= delay ? prev - delay : 0;
        for (std::size_t i = 0; i < platoon.size(); ++i) {
          auto& veh = platoon[i];
          const double v = veh.v[prev];
          double a = 0.0;
          double target = veh.desired_speed;
          if (i == 0) {
            if (prev >= brake_start && prev < brake_end) a = -decel;
          } else {
            const auto& lead = platoon[i - 1];
            const double gap = lead.x[seen] - veh.x[seen];
            const double brake =
                config.k_speed * std::min(0.0, lead.v[seen] - v) +
                config.k_gap * std::min(0.0, gap - (config.reaction_gap_s * v + config.standstill_gap));
            if (brake < 0.0) a = std::max(brake, -config.max_follower_decel);
            target = std::min(target, lead.v[seen]);
          }
          if (a == 0.0 && v < target) a = std::min(config.recover_accel, (target - v) * rate);
          const double v_next = std::max(0.0, v + a / rate);
          veh.v[f] = v_next;
          veh.x[f] = veh.x[prev] + v_next / rate;
        }
      }

      for (const auto& veh : platoon) {
        std::vector<AgentState> clean(n), recorded(n);
        for (std::size_t f = 0; f < n; ++f) {
          const Frame frame = base + static_cast<Frame>(f);
          clean[f] = {veh.x[f], y, frame};
          recorded[f] = clean[f];
          if (config.noise_sigma > 0.0) {
            recorded[f].x += config.noise_sigma * noise(noise_rng);
            recorded[f].y += config.noise_sigma * noise(noise_rng);
          }
        }
        out.clean.emplace_back(veh.id, std::move(clean));
        out.tracks.emplace_back(veh.id, std::move(recorded));
      }
    }
  }
  auto by_id = [](const TrackHistory& a, const TrackHistory& b) { return a.id() < b.id(); };
  std::sort(out.tracks.begin(), out.tracks.end(), by_id);
  std::sort(out.clean.begin(), out.clean.end(), by_id);
  return out;
}

Dataset synthesize_dataset(const SynthConfig& config, const SegmentConfig& segments) {
  if (segments.sample_rate != config.sample_rate) {
    throw Error("segment rate " + std::to_string(segments.sample_rate) +
                " Hz differs from the synthetic rate " + std::to_string(config.sample_rate) + " Hz");
  }
  auto traffic = synthesize_traffic(config);
  std::map<std::string, std::vector<TrackHistory>> tracks;
  tracks[kSynthSubset] = std::move(traffic.tracks);
  return build_dataset(std::move(tracks), segments, config.seed);
}

}  // namespace mfrbp::data
