#include "mfrbp/policies/adapters.hpp"

#include <json.hpp>

#include "mfrbp/config_io.hpp"
#include "mfrbp/error.hpp"
#include "mfrbp/nn/checkpoint.hpp"
#include "mfrbp/policies/cv.hpp"
#include "mfrbp/policies/social_model.hpp"

namespace mfrbp::policies {

using nlohmann::json;

namespace {

constexpr const char* kCspPrefix = "csp/";
constexpr const char* kFcCspPrefix = "fccsp/";

}  // namespace

void save_models(const std::filesystem::path& path, const TrainedModels& models,
                 const std::string& extra_metadata) {
  check_parameters(PolicyKind::CSP, models.csp, models.config);
  check_parameters(PolicyKind::FCCSP, models.fccsp, models.config);
  json meta;
  try {
    meta = json::parse(extra_metadata);
  } catch (const json::parse_error& e) {
    throw Error(std::string("checkpoint metadata is not JSON: ") + e.what());
  }
  if (!meta.is_object()) throw Error("checkpoint metadata must be a JSON object");
  meta["format"] = "mfrbp-models";
  meta["model"] = to_json(models.config);

  nn::ParameterStore bundle;
  for (const auto& name : models.csp.names()) bundle.add(kCspPrefix + name, models.csp.value(name));
  for (const auto& name : models.fccsp.names()) {
    bundle.add(kFcCspPrefix + name, models.fccsp.value(name));
  }
  nn::save_checkpoint(path, bundle, meta.dump());
}

LoadedModels load_models(const std::filesystem::path& path) {
  auto ckpt = nn::load_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ckpt.metadata);
  } catch (const json::parse_error&) {
    throw Error(path.string() + ": checkpoint metadata is not JSON");
  }
  if (!meta.is_object() || meta.value("format", "") != "mfrbp-models") {
    throw Error(path.string() + ": not a model checkpoint");
  }
  LoadedModels out;
  out.metadata = ckpt.metadata;
  out.models.config = csp_config_from_json(meta.at("model"));
  for (const auto& name : ckpt.parameters.names()) {
    const auto& value = ckpt.parameters.value(name);
    if (name.starts_with(kCspPrefix)) {
      out.models.csp.add(name.substr(std::string(kCspPrefix).size()), value);
    } else if (name.starts_with(kFcCspPrefix)) {
      out.models.fccsp.add(name.substr(std::string(kFcCspPrefix).size()), value);
    } else {
      throw Error(path.string() + ": unexpected checkpoint entry " + name);
    }
  }
  check_parameters(PolicyKind::CSP, out.models.csp, out.models.config);
  check_parameters(PolicyKind::FCCSP, out.models.fccsp, out.models.config);
  return out;
}

CvPolicy::CvPolicy(const CspConfig& config) : config_(config) { config_.validate(); }

TrajectoryGaussian CvPolicy::predict(const SceneHistory& scene, AgentId target,
                                     const engine::Conditioning*) const {
  return cv_predict(scene.track(target), config_.horizon_steps(), config_.sample_rate,
                    config_.cv_sigma0, config_.cv_window_s);
}

CspPolicy::CspPolicy(std::shared_ptr<const TrainedModels> models) : models_(std::move(models)) {
  if (!models_) throw Error("CSP policy needs trained parameters");
}

TrajectoryGaussian CspPolicy::predict(const SceneHistory& scene, AgentId target,
                                      const engine::Conditioning*) const {
  return predict_top_mode(PolicyKind::CSP, scene, target, nullptr, models_->csp, models_->config);
}

FcCspPolicy::FcCspPolicy(std::shared_ptr<const TrainedModels> models)
    : models_(std::move(models)) {
  if (!models_) throw Error("FC-CSP policy needs trained parameters");
}

TrajectoryGaussian FcCspPolicy::predict(const SceneHistory& scene, AgentId target,
                                        const engine::Conditioning* others) const {
  if (others == nullptr) throw Error("FC-CSP needs predictions of the other agents");
  return predict_top_mode(PolicyKind::FCCSP, scene, target, others, models_->fccsp,
                          models_->config);
}

engine::PolicySet make_policy_set(std::shared_ptr<const TrainedModels> models) {
  if (!models) throw Error("no trained models");
  return {std::make_shared<CvPolicy>(models->config), std::make_shared<CspPolicy>(models),
          std::make_shared<FcCspPolicy>(models)};
}

}  // namespace mfrbp::policies
