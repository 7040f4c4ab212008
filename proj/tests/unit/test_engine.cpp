#include <gtest/gtest.h>

#include "mfrbp/engine/strategies.hpp"
#include "mfrbp/error.hpp"
#include "support.hpp"

using namespace mfrbp;
using namespace mfrbp::engine;
using testkit::CallLog;
using testkit::StubPolicy;

TEST(Recursion, ConditioningRule) {
  for (const auto& levels : std::vector<std::vector<std::size_t>>{
           {0, 0}, {1, 0}, {1, 1}, {2, 1}, {0, 3, 1}, {2, 2, 0, 1}}) {
    EXPECT_EQ(testkit::check_recursion(levels), "") << ::testing::PrintToString(levels);
  }
}

TEST(Recursion, AllZeroIsLevelZeroPass) {
  auto log = std::make_shared<CallLog>();
  const auto scene = testkit::line_scene(3);
  const auto r = run_mfrbp(scene, testkit::stub_assignment({0, 0, 0}, log));
  ASSERT_EQ(log->calls.size(), 3u);
  for (const auto& c : log->calls) EXPECT_FALSE(c.conditioned);
  for (AgentId id : {1, 2, 3}) {
    EXPECT_EQ(StubPolicy::level_of(r.predictions.at(id)), 0u);
    EXPECT_EQ(r.trace.levels(id), 1u);
  }
}

TEST(Recursion, PinnedLevelZeroReplacesLadder) {
  auto log = std::make_shared<CallLog>();
  const auto scene = testkit::line_scene(2);
  auto a = testkit::stub_assignment({1, 1}, log);
  TrajectoryGaussian plan;
  plan.agent_id = 1;
  for (int s = 0; s < 3; ++s) {
    plan.means.push_back({42.0, 7.0});
    plan.covariances.push_back({});
  }
  a.pinned_level0[1] = plan;
  const auto r = run_mfrbp(scene, a);
  EXPECT_TRUE(r.trace.at(1, 0) == plan);
  for (const auto& c : log->calls) EXPECT_FALSE(c.agent == 1 && c.rung == 0);
  // Agent 2's level-1 call saw the plan (encoded level 7).
  bool saw = false;
  for (const auto& c : log->calls) {
    if (c.agent == 2 && c.rung == 1) saw = c.seen_levels.at(1) == 7;
  }
  EXPECT_TRUE(saw);
}

TEST(Recursion, ValidationErrors) {
  auto log = std::make_shared<CallLog>();
  const auto scene = testkit::line_scene(2);
  EXPECT_THROW(run_mfrbp(scene, testkit::stub_assignment({1}, log)), Error);  // agent 2 missing
  auto a = testkit::stub_assignment({1, 1}, log);
  a.agents.at(1).ladder.pop_back();
  EXPECT_THROW(run_mfrbp(scene, a), Error);
  auto b = testkit::stub_assignment({1, 1}, log);
  b.agents.at(2).ladder[1] = std::make_shared<StubPolicy>(0, log);  // history-only on rung 1
  EXPECT_THROW(run_mfrbp(scene, b), Error);
}

namespace {

class Failing : public Policy {
 public:
  std::string name() const override { return "Broken"; }
  bool future_conditional() const override { return true; }
  TrajectoryGaussian predict(const SceneHistory&, AgentId, const Conditioning*) const override {
    throw Error("kaboom");
  }
};

}  // namespace

TEST(Recursion, ErrorsCarryContext) {
  auto log = std::make_shared<CallLog>();
  const auto scene = testkit::line_scene(2);
  auto a = testkit::stub_assignment({1, 1}, log);
  a.agents.at(2).ladder[1] = std::make_shared<Failing>();
  try {
    run_mfrbp(scene, a);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("agent 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("level 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("Broken"), std::string::npos) << msg;
    EXPECT_NE(msg.find("kaboom"), std::string::npos) << msg;
  }
}

TEST(Sensor, Zones) {
  SensorModel s{1, 60.0, 0.25};
  EXPECT_EQ(s.classify(10.0), SensorZone::Core);
  EXPECT_EQ(s.classify(45.0), SensorZone::Core);
  EXPECT_EQ(s.classify(45.1), SensorZone::Peripheral);
  EXPECT_EQ(s.classify(60.0), SensorZone::Peripheral);
  EXPECT_EQ(s.classify(60.1), SensorZone::OutOfRange);
  EXPECT_EQ(s.classify(Vec2{0, 0}, Vec2{30, 40}), SensorZone::Peripheral);
  s.periphery_fraction = 1.5;
  EXPECT_THROW(s.validate(), Error);
}

namespace {

PolicySet stub_set(const std::shared_ptr<CallLog>& log, std::size_t horizon = 3) {
  return {std::make_shared<StubPolicy>(0, log, horizon), std::make_shared<StubPolicy>(0, log, horizon),
          std::make_shared<StubPolicy>(1, log, horizon)};
}

SceneHistory spread_scene() {
  // Agents at 0, 20, 50 and 100 m along one lane.
  std::vector<TrackHistory> tracks;
  for (auto [id, x] : std::vector<std::pair<AgentId, double>>{{1, 0}, {2, 20}, {3, 50}, {4, 100}}) {
    tracks.emplace_back(id, std::vector<AgentState>{{x - 1, 0, 0}, {x, 0, 1}});
  }
  return SceneHistory(tracks, 10.0);
}

}  // namespace

TEST(Strategies, L1RbpEveryoneLevelOne) {
  auto log = std::make_shared<CallLog>();
  const auto scene = spread_scene();
  const auto a = make_l1_rbp(scene, stub_set(log));
  for (const auto& [id, l] : a.agents) EXPECT_EQ(l.level, 1u);
}

TEST(Strategies, L1MfrbpFiltersBySensor) {
  auto log = std::make_shared<CallLog>();
  const auto set = stub_set(log);
  const auto f = make_l1_mfrbp(spread_scene(), SensorModel{1, 60.0, 0.25}, set);
  EXPECT_EQ(f.scene.agent_ids(), (std::vector<AgentId>{1, 2, 3}));
  EXPECT_EQ(f.assignment.agents.at(1).level, 1u);
  EXPECT_EQ(f.assignment.agents.at(2).level, 1u);
  EXPECT_EQ(f.assignment.agents.at(3).level, 0u);
  EXPECT_EQ(f.assignment.agents.at(3).ladder[0], set.cv);
  EXPECT_THROW(make_l1_mfrbp(spread_scene(), SensorModel{9, 60.0, 0.25}, set), Error);
}

TEST(Strategies, PlanningPinsEgo) {
  auto log = std::make_shared<CallLog>();
  std::vector<Vec2> plan{{1, 0}, {2, 0}, {3, 0}};
  const auto f = make_planning_aware(spread_scene(), SensorModel{1, 60.0, 0.25}, plan, 3,
                                     stub_set(log));
  const auto& pinned = f.assignment.pinned_level0.at(1);
  EXPECT_EQ(pinned.means, plan);
  for (const auto& c : pinned.covariances) EXPECT_TRUE(c == Cov2{});
  EXPECT_THROW(make_planning_aware(spread_scene(), SensorModel{1, 60.0, 0.25}, plan, 5,
                                   stub_set(log)),
               Error);
  const auto r = run_mfrbp(f.scene, f.assignment);
  EXPECT_EQ(r.trace.at(1, 0).means, plan);
}
