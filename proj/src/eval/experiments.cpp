#include "mfrbp/eval/experiments.hpp"

#include <map>
#include <random>
#include <set>

#include "mfrbp/data/egos.hpp"
#include "mfrbp/engine/mfrbp.hpp"
#include "mfrbp/engine/strategies.hpp"
#include "mfrbp/error.hpp"
#include "mfrbp/policies/cv.hpp"

namespace mfrbp::eval {
namespace {

struct Evaluator {
  const data::Dataset& dataset;
  const policies::CspConfig& config;
  ExperimentResult& result;
  std::size_t plot_samples;

  RmseAccumulator final_acc;
  RmseAccumulator level0_acc;
  RmseAccumulator cv_acc;

  void record(const data::SceneGroup& group, const data::SceneGroup::Target& target,
              const engine::MfrbpResult& run, std::size_t pass, AgentId ego) {
    const auto& track = group.scene.track(target.agent);
    const auto& final_pred = run.predictions.at(target.agent);
    const auto& level0 = run.trace.at(target.agent, 0);
    const auto cv = policies::cv_predict(track, config.horizon_steps(), config.sample_rate,
                                         config.cv_sigma0, config.cv_window_s);
    const double rate = config.sample_rate;
    SegmentError e{{group.subset, target.agent, group.frame},
                   pass,
                   ego,
                   horizon_errors(final_pred.means, target.future, kHorizons, rate),
                   horizon_errors(level0.means, target.future, kHorizons, rate),
                   horizon_errors(cv.means, target.future, kHorizons, rate)};
    final_acc.add(e.level1);
    level0_acc.add(e.level0);
    cv_acc.add(e.cv);
    if (pass == 0 && result.samples.size() < plot_samples) {
      PlotSample s{e.segment, {}, target.future, level0, final_pred};
      for (const auto& st : track.states()) s.history.push_back(st.position());
      result.samples.push_back(std::move(s));
    }
    result.errors.push_back(std::move(e));
  }

  void close_pass(std::vector<RmseTable>& finals, std::vector<RmseTable>& level0s,
                  std::vector<RmseTable>& cvs) {
    finals.push_back(final_acc.table());
    level0s.push_back(level0_acc.table());
    cvs.push_back(cv_acc.table());
    final_acc = RmseAccumulator();
    level0_acc = RmseAccumulator();
    cv_acc = RmseAccumulator();
  }
};

}  // namespace

ExperimentResult run_experiment(const data::Dataset& dataset,
                                std::shared_ptr<const policies::TrainedModels> models,
                                const ExperimentOptions& options) {
  if (!models) throw Error("experiment needs trained models");
  if (options.experiment < 1 || options.experiment > 3) {
    throw Error("unknown experiment " + std::to_string(options.experiment));
  }
  const auto& config = models->config;
  if (dataset.segments.sample_rate != config.sample_rate) {
    throw Error("dataset is sampled at " + std::to_string(dataset.segments.sample_rate) +
                " Hz but the models at " + std::to_string(config.sample_rate) + " Hz");
  }
  if (dataset.segments.horizon_steps() != config.horizon_steps() ||
      dataset.segments.history_steps() != config.history_steps()) {
    throw Error("dataset windows do not match the model's history and horizon");
  }
  if (dataset.test.empty()) throw Error("dataset has no test segments");
  if (options.experiment > 1 && options.passes == 0) throw Error("passes must be at least 1");

  const auto policies = policies::make_policy_set(models);
  const auto groups = data::group_segments(dataset, dataset.test);
  ExperimentResult result;
  result.experiment = options.experiment;
  Evaluator ev{dataset, config, result, options.plot_samples, {}, {}, {}};
  std::vector<RmseTable> finals, level0s, cvs;

  if (options.experiment == 1) {
    for (const auto& group : groups) {
      const auto run = engine::run_mfrbp(group.scene, engine::make_l1_rbp(group.scene, policies));
      for (const auto& t : group.targets) ev.record(group, t, run, 0, -1);
    }
    ev.close_pass(finals, level0s, cvs);
  } else {
    const std::size_t horizon = config.horizon_steps();
    std::mt19937_64 rng(options.seed);
    for (std::size_t pass = 0; pass < options.passes; ++pass) {
      for (const auto& group : groups) {
        const std::uint64_t group_seed = rng();
        const auto& tracks = dataset.subset(group.subset);
        std::map<AgentId, std::vector<Vec2>> futures;
        std::set<AgentId> eligible;
        for (AgentId a : group.scene.agent_ids()) {
          if (auto f = tracks.future(a, group.frame, horizon)) {
            futures.emplace(a, std::move(*f));
            eligible.insert(a);
          }
        }
        std::vector<AgentId> targets;
        for (const auto& t : group.targets) targets.push_back(t.agent);
        engine::SensorModel sensor{0, options.sensor_range, options.periphery_fraction};
        const auto sample = data::sample_egos(group.scene, targets, sensor, group_seed, &eligible);
        result.egos += sample.egos.size();

        for (AgentId ego : sample.egos) {
          std::vector<const data::SceneGroup::Target*> mine;
          for (const auto& t : group.targets) {
            if (sample.evaluator.at(t.agent) == ego) mine.push_back(&t);
          }
          if (mine.empty()) continue;
          sensor.ego_id = ego;
          const bool self = mine.size() == 1 && mine.front()->agent == ego;
          const bool pin = options.experiment == 3 && !self;
          const auto fa = pin ? engine::make_planning_aware(group.scene, sensor, futures.at(ego),
                                                            horizon, policies)
                              : engine::make_l1_mfrbp(group.scene, sensor, policies);
          const auto run = engine::run_mfrbp(fa.scene, fa.assignment);
          for (const auto* t : mine) {
            if (t->agent == ego) ++result.self_covered;
            ev.record(group, *t, run, pass, ego);
          }
        }
      }
      ev.close_pass(finals, level0s, cvs);
    }
  }

  result.pass_tables = finals;
  result.table = weighted_mean(finals);
  result.level0 = weighted_mean(level0s);
  result.cv = weighted_mean(cvs);
  return result;
}

}  // namespace mfrbp::eval
