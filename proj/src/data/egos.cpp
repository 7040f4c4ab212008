#include "mfrbp/data/egos.hpp"

#include <algorithm>
#include <random>

#include "mfrbp/error.hpp"

namespace mfrbp::data {
namespace {

bool in_core(const SceneHistory& scene, const engine::SensorModel& sensor, AgentId ego,
             AgentId other) {
  return sensor.classify(scene.track(ego).last().position(), scene.track(other).last().position()) ==
         engine::SensorZone::Core;
}

}  // namespace

EgoSample sample_egos(const SceneHistory& scene, const std::vector<AgentId>& targets,
                      const engine::SensorModel& sensor, std::uint64_t seed,
                      const std::set<AgentId>* eligible) {
  sensor.validate();
  for (AgentId t : targets) {
    if (!scene.contains(t)) throw Error("target " + std::to_string(t) + " is not in the scene");
  }
  std::set<AgentId> uncovered(targets.begin(), targets.end());
  std::mt19937_64 rng(seed);
  EgoSample out;
  const auto agents = scene.agent_ids();
  while (!uncovered.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, uncovered.size() - 1);
    const AgentId u = *std::next(uncovered.begin(), static_cast<std::ptrdiff_t>(pick(rng)));
    AgentId best = u;
    std::size_t best_count = 0;
    bool best_is_self = true;
    for (AgentId a : agents) {
      if (eligible != nullptr && !eligible->count(a)) continue;
      if (!in_core(scene, sensor, a, u)) continue;
      std::size_t count = 0;
      for (AgentId t : uncovered) count += in_core(scene, sensor, a, t) ? 1 : 0;
      const bool is_self = a == u;
      if (count > best_count || (count == best_count && best_is_self && !is_self)) {
        best = a;
        best_count = count;
        best_is_self = is_self;
      }
    }
    out.egos.push_back(best);
    for (auto it = uncovered.begin(); it != uncovered.end();) {
      it = in_core(scene, sensor, best, *it) ? uncovered.erase(it) : std::next(it);
    }
  }
  for (AgentId t : targets) {
    AgentId chosen = t;
    for (AgentId e : out.egos) {
      if (e != t && in_core(scene, sensor, e, t)) {
        chosen = e;
        break;
      }
    }
    out.evaluator[t] = chosen;
  }
  return out;
}

bool covers_all(const SceneHistory& scene, const std::vector<AgentId>& targets,
                const std::vector<AgentId>& egos, const engine::SensorModel& sensor) {
  return std::all_of(targets.begin(), targets.end(), [&](AgentId t) {
    return std::any_of(egos.begin(), egos.end(),
                       [&](AgentId e) { return in_core(scene, sensor, e, t); });
  });
}

}  // namespace mfrbp::data
