#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "mfrbp/data/segments.hpp"
#include "mfrbp/data/synth.hpp"
#include "mfrbp/engine/sensor.hpp"
#include "mfrbp/policies/config.hpp"
#include "mfrbp/policies/training.hpp"

// JSON configuration. Every section and field is optional; missing fields
// keep their defaults and unknown fields are rejected so typos surface.
//
//   {
//     "model":    { CspConfig fields },
//     "train":    { TrainConfig fields, "mode": "l1rbp" | "l1mfrbp" },
//     "synth":    { SynthConfig fields },
//     "segments": { SegmentConfig fields },
//     "sensor":   { "range": m, "periphery_fraction": f }
//   }

namespace mfrbp {

struct RunConfig {
  policies::CspConfig model;
  policies::TrainConfig train;
  data::SynthConfig synth;
  data::SegmentConfig segments;
  engine::SensorModel sensor;

  void validate() const;
};

nlohmann::json to_json(const policies::CspConfig& c);
nlohmann::json to_json(const policies::TrainConfig& c);
nlohmann::json to_json(const data::SynthConfig& c);
nlohmann::json to_json(const data::SegmentConfig& c);
nlohmann::json to_json(const engine::SensorModel& c);
nlohmann::json to_json(const RunConfig& c);

/// Overlay `j` onto `base`.
policies::CspConfig csp_config_from_json(const nlohmann::json& j, policies::CspConfig base = {});
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully expanded config, keys sorted; stable input for hashing.
std::string canonical_json(const RunConfig& config);

}  // namespace mfrbp
