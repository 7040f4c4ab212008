#include "mfrbp/policies/training.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "mfrbp/engine/strategies.hpp"
#include "mfrbp/error.hpp"
#include "mfrbp/nn/adam.hpp"
#include "mfrbp/policies/social_model.hpp"

namespace mfrbp::policies {

const char* to_string(TrainingMode mode) {
  return mode == TrainingMode::L1Rbp ? "l1rbp" : "l1mfrbp";
}

TrainingMode training_mode_from_string(const std::string& name) {
  if (name == "l1rbp") return TrainingMode::L1Rbp;
  if (name == "l1mfrbp") return TrainingMode::L1Mfrbp;
  throw Error("unknown training mode '" + name + "' (expected l1rbp or l1mfrbp)");
}

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0) throw Error("epochs and batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw Error("invalid Adam hyperparameters");
  }
  if (!(csp_weight >= 0.0) || !(fccsp_weight >= 0.0) || !(maneuver_weight >= 0.0)) {
    throw Error("loss weights must be non-negative");
  }
  engine::SensorModel{0, sensor_range, periphery_fraction}.validate();
}

std::vector<double> TrainingResult::loss_curve() const {
  std::vector<double> out;
  for (const auto& e : epochs) out.push_back(e.total);
  return out;
}

namespace {

struct Example {
  std::size_t group = 0;
  std::size_t target = 0;
};

bool in_core(const engine::SensorModel& s, const SceneHistory& scene, AgentId a, AgentId b) {
  return s.classify(scene.track(a).last().position(), scene.track(b).last().position()) ==
         engine::SensorZone::Core;
}

NeighborFutures level0_except(const engine::FilteredAssignment& fa, AgentId skip) {
  NeighborFutures out;
  for (const auto& [id, ladder] : fa.assignment.agents) {
    if (id == skip) continue;
    out.emplace(id, ladder.ladder[0]->predict(fa.scene, id, nullptr));
  }
  return out;
}

}  // namespace

TrainingResult train_policies(const std::vector<data::SceneGroup>& groups,
                              const CspConfig& config, const TrainConfig& train,
                              std::uint64_t seed, const EpochCallback& on_epoch) {
  config.validate();
  train.validate();
  std::vector<Example> examples;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].scene.sample_rate() != config.sample_rate) {
      throw Error("training data is sampled at " + std::to_string(groups[g].scene.sample_rate()) +
                  " Hz but the model expects " + std::to_string(config.sample_rate) + " Hz");
    }
    for (std::size_t t = 0; t < groups[g].targets.size(); ++t) examples.push_back({g, t});
  }
  if (examples.empty()) throw Error("cannot train on an empty dataset");

  std::mt19937_64 rng(seed);
  auto models = std::make_shared<TrainedModels>();
  models->config = config;
  models->csp = init_parameters(PolicyKind::CSP, config, rng());
  models->fccsp = init_parameters(PolicyKind::FCCSP, config, rng());
  const auto policies = make_policy_set(models);

  const nn::AdamOptions adam{train.learning_rate, train.beta1, train.beta2, train.epsilon};
  nn::AdamState csp_adam{adam, 0, {}, {}};
  nn::AdamState fccsp_adam{adam, 0, {}, {}};

  std::vector<std::size_t> maneuvers(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& g = groups[examples[i].group];
    const auto& t = g.targets[examples[i].target];
    maneuvers[i] = label_maneuver(g.scene.track(t.agent), t.future, config);
  }

  // Examples of one scene stay adjacent so a batch shares level-0 passes.
  std::vector<std::vector<std::size_t>> by_group(groups.size());
  for (std::size_t i = 0; i < examples.size(); ++i) by_group[examples[i].group].push_back(i);

  TrainingResult result;
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    std::vector<std::size_t> group_order(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) group_order[g] = g;
    std::shuffle(group_order.begin(), group_order.end(), rng);
    std::vector<std::size_t> order;
    order.reserve(examples.size());
    for (std::size_t g : group_order) {
      auto members = by_group[g];
      std::shuffle(members.begin(), members.end(), rng);
      order.insert(order.end(), members.begin(), members.end());
    }

    EpochStats stats;
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      const std::size_t end = std::min(order.size(), start + train.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      models->csp.zero_grad();
      models->fccsp.zero_grad();
      std::map<std::size_t, ScenePrediction> rbp_cache;

      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const auto& group = groups[examples[idx].group];
        const auto& target = group.targets[examples[idx].target];

        SceneHistory scene = group.scene;
        NeighborFutures futures;
        if (train.mode == TrainingMode::L1Rbp) {
          auto it = rbp_cache.find(examples[idx].group);
          if (it == rbp_cache.end()) {
            engine::FilteredAssignment fa{group.scene, engine::make_l1_rbp(group.scene, policies)};
            it = rbp_cache.emplace(examples[idx].group, level0_except(fa, -1)).first;
          }
          futures = it->second;
          futures.erase(target.agent);
        } else {
          engine::SensorModel sensor{0, train.sensor_range, train.periphery_fraction};
          std::vector<AgentId> candidates;
          for (AgentId a : group.scene.agent_ids()) {
            if (in_core(sensor, group.scene, a, target.agent)) candidates.push_back(a);
          }
          sensor.ego_id = candidates[std::uniform_int_distribution<std::size_t>(
              0, candidates.size() - 1)(rng)];
          auto fa = engine::make_l1_mfrbp(group.scene, sensor, policies);
          futures = level0_except(fa, target.agent);
          scene = std::move(fa.scene);
        }

        const auto csp = model_loss(PolicyKind::CSP, scene, target.agent, nullptr, target.future,
                                    maneuvers[idx], models->csp, config, train.maneuver_weight,
                                    train.csp_weight * scale);
        const auto fc = model_loss(PolicyKind::FCCSP, scene, target.agent, &futures,
                                   target.future, maneuvers[idx], models->fccsp, config,
                                   train.maneuver_weight, train.fccsp_weight * scale);
        stats.csp_nll += csp.nll;
        stats.csp_maneuver += csp.maneuver;
        stats.fccsp_nll += fc.nll;
        stats.fccsp_maneuver += fc.maneuver;
        stats.total += train.csp_weight * csp.total() + train.fccsp_weight * fc.total();
        ++stats.examples;
      }
      nn::adam_step(models->csp, csp_adam);
      nn::adam_step(models->fccsp, fccsp_adam);
    }
    const double n = static_cast<double>(stats.examples);
    stats.total /= n;
    stats.csp_nll /= n;
    stats.csp_maneuver /= n;
    stats.fccsp_nll /= n;
    stats.fccsp_maneuver /= n;
    result.epochs.push_back(stats);
    if (on_epoch) on_epoch(epoch, stats);
  }
  result.models = *models;
  return result;
}

}  // namespace mfrbp::policies
