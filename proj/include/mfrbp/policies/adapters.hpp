#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "mfrbp/engine/policy.hpp"
#include "mfrbp/engine/strategies.hpp"
#include "mfrbp/nn/tensor.hpp"
#include "mfrbp/policies/config.hpp"

namespace mfrbp::policies {

/// Trained CSP and FC-CSP weights with the configuration they were built for.
struct TrainedModels {
  CspConfig config;
  nn::ParameterStore csp;
  nn::ParameterStore fccsp;
};

/// One checkpoint file holding both stores ("csp/..." and "fccsp/..."
/// entries); the metadata is JSON with the model config under "model" plus
/// whatever `extra_metadata` (a JSON object) holds.
void save_models(const std::filesystem::path& path, const TrainedModels& models,
                 const std::string& extra_metadata = "{}");

struct LoadedModels {
  TrainedModels models;
  std::string metadata;
};
LoadedModels load_models(const std::filesystem::path& path);

class CvPolicy : public engine::Policy {
 public:
  explicit CvPolicy(const CspConfig& config);

  std::string name() const override { return "CV"; }
  bool future_conditional() const override { return false; }
  TrajectoryGaussian predict(const SceneHistory& scene, AgentId target,
                             const engine::Conditioning* others) const override;

 private:
  CspConfig config_;
};

class CspPolicy : public engine::Policy {
 public:
  explicit CspPolicy(std::shared_ptr<const TrainedModels> models);

  std::string name() const override { return "CSP"; }
  bool future_conditional() const override { return false; }
  TrajectoryGaussian predict(const SceneHistory& scene, AgentId target,
                             const engine::Conditioning* others) const override;

 private:
  std::shared_ptr<const TrainedModels> models_;
};

class FcCspPolicy : public engine::Policy {
 public:
  explicit FcCspPolicy(std::shared_ptr<const TrainedModels> models);

  std::string name() const override { return "FC-CSP"; }
  bool future_conditional() const override { return true; }
  /// Throws when `others` is null: FC-CSP has no history-only mode.
  TrajectoryGaussian predict(const SceneHistory& scene, AgentId target,
                             const engine::Conditioning* others) const override;

 private:
  std::shared_ptr<const TrainedModels> models_;
};

engine::PolicySet make_policy_set(std::shared_ptr<const TrainedModels> models);

}  // namespace mfrbp::policies
