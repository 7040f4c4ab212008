#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "mfrbp/data/segments.hpp"
#include "mfrbp/engine/sensor.hpp"
#include "mfrbp/eval/rmse.hpp"
#include "mfrbp/policies/adapters.hpp"

namespace mfrbp::eval {

struct ExperimentOptions {
  int experiment = 1;  // 1: L1-RBP, 2: ego-sampled L1-MFRBP, 3: planning-aware L1-MFRBP
  std::uint64_t seed = 1;
  std::size_t passes = 10;  // experiments 2 and 3
  double sensor_range = 60.0;
  double periphery_fraction = 0.25;
  std::size_t plot_samples = 4;
};

struct SegmentError {
  data::Segment segment;
  std::size_t pass = 0;
  AgentId ego = -1;  // -1 when no ego is involved
  std::vector<double> level1;  // final prediction, per horizon
  std::vector<double> level0;
  std::vector<double> cv;
};

struct PlotSample {
  data::Segment segment;
  std::vector<Vec2> history;
  std::vector<Vec2> truth;
  TrajectoryGaussian level0;
  TrajectoryGaussian level1;
};

struct ExperimentResult {
  int experiment = 1;
  RmseTable table;   // final (level-k_i) predictions
  RmseTable level0;  // level-0 trace entries of the same predictions
  RmseTable cv;      // constant-velocity baseline on the same segments
  std::vector<RmseTable> pass_tables;
  std::vector<SegmentError> errors;
  std::vector<PlotSample> samples;
  std::size_t egos = 0;          // summed over passes
  std::size_t self_covered = 0;  // summed over passes
};

/// Experiment 1 runs L1-RBP once over every test scene. Experiments 2 and 3
/// draw, per pass and scene, a set of egos that covers every test vehicle
/// (only agents with a fully observed future are eligible) and evaluate each
/// vehicle once from the first covering ego other than itself; experiment 3
/// additionally pins that ego's level-0 slot to its ground-truth future.
/// Vehicles covered only by themselves are evaluated from their own
/// un-pinned L1-MFRBP run in both. Pass tables are combined with
/// weighted_mean().
ExperimentResult run_experiment(const data::Dataset& dataset,
                                std::shared_ptr<const policies::TrainedModels> models,
                                const ExperimentOptions& options);

}  // namespace mfrbp::eval
