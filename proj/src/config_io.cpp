#include "mfrbp/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "mfrbp/error.hpp"

namespace mfrbp {

using nlohmann::json;

namespace {

template <typename F>
void visit(policies::CspConfig& c, F&& f) {
  f("grid_rows", c.grid_rows);
  f("grid_cols", c.grid_cols);
  f("cell_length", c.cell_length);
  f("cell_width", c.cell_width);
  f("embed_size", c.embed_size);
  f("encoder_hidden", c.encoder_hidden);
  f("dyn_embed_size", c.dyn_embed_size);
  f("conv_filters", c.conv_filters);
  f("conv_kernel", c.conv_kernel);
  f("pool_rows", c.pool_rows);
  f("decoder_hidden", c.decoder_hidden);
  f("num_modes", c.num_modes);
  f("sample_rate", c.sample_rate);
  f("leaky_slope", c.leaky_slope);
  f("position_scale", c.position_scale);
  f("velocity_scale", c.velocity_scale);
  f("cv_window_s", c.cv_window_s);
  f("cv_sigma0", c.cv_sigma0);
  f("lateral_threshold_lanes", c.lateral_threshold_lanes);
  f("braking_speed_ratio", c.braking_speed_ratio);
}

template <typename F>
void visit(policies::TrainConfig& c, F&& f) {
  f("epochs", c.epochs);
  f("batch_size", c.batch_size);
  f("learning_rate", c.learning_rate);
  f("beta1", c.beta1);
  f("beta2", c.beta2);
  f("epsilon", c.epsilon);
  f("csp_weight", c.csp_weight);
  f("fccsp_weight", c.fccsp_weight);
  f("maneuver_weight", c.maneuver_weight);
  f("mode", c.mode);
  f("sensor_range", c.sensor_range);
  f("periphery_fraction", c.periphery_fraction);
}

template <typename F>
void visit(data::SynthConfig& c, F&& f) {
  f("scenes", c.scenes);
  f("lanes", c.lanes);
  f("vehicles_per_lane", c.vehicles_per_lane);
  f("min_speed", c.min_speed);
  f("max_speed", c.max_speed);
  f("braking_probability", c.braking_probability);
  f("min_decel", c.min_decel);
  f("max_decel", c.max_decel);
  f("min_brake_s", c.min_brake_s);
  f("max_brake_s", c.max_brake_s);
  f("reaction_gap_s", c.reaction_gap_s);
  f("reaction_delay_s", c.reaction_delay_s);
  f("initial_headway_s", c.initial_headway_s);
  f("standstill_gap", c.standstill_gap);
  f("k_speed", c.k_speed);
  f("k_gap", c.k_gap);
  f("recover_accel", c.recover_accel);
  f("max_follower_decel", c.max_follower_decel);
  f("lane_width", c.lane_width);
  f("noise_sigma", c.noise_sigma);
  f("duration_s", c.duration_s);
  f("sample_rate", c.sample_rate);
  f("seed", c.seed);
}

template <typename F>
void visit(data::SegmentConfig& c, F&& f) {
  f("sample_rate", c.sample_rate);
  f("history_s", c.history_s);
  f("horizon_s", c.horizon_s);
  f("stride_s", c.stride_s);
}

template <typename F>
void visit(engine::SensorModel& c, F&& f) {
  f("range", c.range);
  f("periphery_fraction", c.periphery_fraction);
}

template <typename T>
json write(T c) {
  json out = json::object();
  visit(c, [&](const char* key, auto& field) {
    using V = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<V, policies::TrainingMode>) {
      out[key] = policies::to_string(field);
    } else {
      out[key] = field;
    }
  });
  return out;
}

template <typename T>
T read(const json& j, T base, const std::string& section) {
  if (!j.is_object()) throw Error("config section '" + section + "' must be an object");
  std::set<std::string> known;
  visit(base, [&](const char* key, auto& field) {
    known.insert(key);
    auto it = j.find(key);
    if (it == j.end()) return;
    using V = std::decay_t<decltype(field)>;
    try {
      if constexpr (std::is_same_v<V, policies::TrainingMode>) {
        field = policies::training_mode_from_string(it->template get<std::string>());
      } else if constexpr (std::is_integral_v<V>) {
        if (!it->is_number_integer() || (std::is_unsigned_v<V> && it->template get<long long>() < 0)) {
          throw Error("expected a non-negative integer");
        }
        field = it->template get<V>();
      } else {
        if (!it->is_number()) throw Error("expected a number");
        field = it->template get<V>();
      }
    } catch (const std::exception& e) {
      throw Error("config field " + section + "." + key + ": " + e.what());
    }
  });
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error("unknown config field " + section + "." + key);
  }
  return base;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  synth.validate();
  segments.validate();
  sensor.validate();
  if (model.sample_rate != segments.sample_rate) {
    throw Error("model rate " + std::to_string(model.sample_rate) +
                " Hz differs from segment rate " + std::to_string(segments.sample_rate) + " Hz");
  }
  if (model.history_steps() != segments.history_steps() ||
      model.horizon_steps() != segments.horizon_steps()) {
    throw Error("segment history/horizon must match the model's 3 s / 5 s windows");
  }
}

json to_json(const policies::CspConfig& c) { return write(c); }
json to_json(const policies::TrainConfig& c) { return write(c); }
json to_json(const data::SynthConfig& c) { return write(c); }
json to_json(const data::SegmentConfig& c) { return write(c); }
json to_json(const engine::SensorModel& c) { return write(c); }

json to_json(const RunConfig& c) {
  return {{"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"synth", to_json(c.synth)},
          {"segments", to_json(c.segments)},
          {"sensor", to_json(c.sensor)}};
}

policies::CspConfig csp_config_from_json(const json& j, policies::CspConfig base) {
  return read(j, base, "model");
}

RunConfig run_config_from_json(const json& j, RunConfig base) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      base.model = read(value, base.model, key);
    } else if (key == "train") {
      base.train = read(value, base.train, key);
    } else if (key == "synth") {
      base.synth = read(value, base.synth, key);
    } else if (key == "segments") {
      base.segments = read(value, base.segments, key);
    } else if (key == "sensor") {
      base.sensor = read(value, base.sensor, key);
    } else {
      throw Error("unknown config section '" + key + "'");
    }
  }
  base.validate();
  return base;
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_run_config(buf.str());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string canonical_json(const RunConfig& config) { return to_json(config).dump(); }

}  // namespace mfrbp
