#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "mfrbp/data/segments.hpp"
#include "mfrbp/policies/adapters.hpp"
#include "mfrbp/policies/config.hpp"

namespace mfrbp::policies {

/// How the FC-CSP conditioning is produced during training.
///   L1Rbp:   every other agent's level-0 CSP prediction.
///   L1Mfrbp: a random ego whose core zone holds the target filters the
///            scene; peripheral agents contribute CV predictions.
enum class TrainingMode { L1Rbp, L1Mfrbp };

const char* to_string(TrainingMode mode);
TrainingMode training_mode_from_string(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 12;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double csp_weight = 1.0;
  double fccsp_weight = 1.0;
  double maneuver_weight = 1.0;
  TrainingMode mode = TrainingMode::L1Rbp;
  double sensor_range = 60.0;
  double periphery_fraction = 0.25;

  void validate() const;
};

struct EpochStats {
  double total = 0.0;  // mean per-example loss over the epoch
  double csp_nll = 0.0;
  double csp_maneuver = 0.0;
  double fccsp_nll = 0.0;
  double fccsp_maneuver = 0.0;
  std::size_t examples = 0;
};

struct TrainingResult {
  TrainedModels models;
  std::vector<EpochStats> epochs;

  std::vector<double> loss_curve() const;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochStats&)>;

/// Joint training of CSP and FC-CSP from scratch. Per batch, level-0
/// neighbour predictions come from the current CSP weights (held constant
/// for the gradient), FC-CSP is conditioned on them, and the loss
///
///   csp_weight * (NLL_csp + m * CE_csp) + fccsp_weight * (NLL_fccsp + m * CE_fccsp)
///
/// is averaged over the batch before one Adam step on each store. The loss
/// reported for an epoch is the running mean over its batches.
TrainingResult train_policies(const std::vector<data::SceneGroup>& groups,
                              const CspConfig& config, const TrainConfig& train,
                              std::uint64_t seed, const EpochCallback& on_epoch = {});

}  // namespace mfrbp::policies
