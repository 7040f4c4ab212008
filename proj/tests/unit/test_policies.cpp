#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>

#include "mfrbp/data/segments.hpp"
#include "mfrbp/data/synth.hpp"
#include "mfrbp/error.hpp"
#include "mfrbp/policies/adapters.hpp"
#include "mfrbp/policies/social_grid.hpp"
#include "mfrbp/policies/training.hpp"
#include "support.hpp"

using namespace mfrbp;
using namespace mfrbp::policies;

namespace {

TrackHistory straight_track(AgentId id, Vec2 start, Vec2 step, std::size_t n) {
  std::vector<AgentState> s;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back({start.x + step.x * i, start.y + step.y * i, static_cast<Frame>(i)});
  }
  return TrackHistory(id, std::move(s));
}

}  // namespace

TEST(ConstantVelocity, MatchesOracleOnRandomTracks) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-50, 50), d(-2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<AgentState> s;
    double x = u(rng), y = u(rng);
    const std::size_t n = 2 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      x += d(rng);
      y += 0.1 * d(rng);
      s.push_back({x, y, static_cast<Frame>(i)});
    }
    const TrackHistory track(1, s);
    const auto got = cv_predict(track, 50, 10.0, 0.5, 1.0);
    const auto want = testkit::cv_oracle(track, 50, 10);
    for (std::size_t k = 0; k < 50; ++k) {
      EXPECT_NEAR(got.means[k].x, want[k].x, 1e-12);
      EXPECT_NEAR(got.means[k].y, want[k].y, 1e-12);
    }
  }
}

TEST(ConstantVelocity, CovarianceGrowth) {
  const auto t = cv_predict(straight_track(1, {0, 0}, {1, 0}, 5), 10, 10.0, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(t.covariances[9].xx, 0.25);  // (0.5 * 1 s)^2
  EXPECT_EQ(t.covariances[9].xy, 0.0);
  EXPECT_THROW(cv_predict(straight_track(1, {0, 0}, {1, 0}, 1), 10, 10.0), Error);
}

TEST(SocialGrid, CellsAroundTarget) {
  CspConfig c;
  EXPECT_EQ(grid_cell_for_offset({0, 0}, c), (GridCell{6, 1}));
  EXPECT_EQ(grid_cell_for_offset({c.cell_length, c.cell_width}, c), (GridCell{7, 2}));
  EXPECT_EQ(grid_cell_for_offset({-6 * c.cell_length, -c.cell_width}, c), (GridCell{0, 0}));
  EXPECT_FALSE(grid_cell_for_offset({7 * c.cell_length, 0}, c));
  EXPECT_FALSE(grid_cell_for_offset({0, 2 * c.cell_width}, c));
}

TEST(SocialGrid, OneOccupantPerCell) {
  CspConfig c;
  std::vector<TrackHistory> tracks{straight_track(1, {0, 0}, {1, 0}, 3),
                                   straight_track(2, {10.5, 0}, {1, 0}, 3),
                                   straight_track(3, {9.0, 0.2}, {1, 0}, 3),
                                   straight_track(4, {0, 100}, {1, 0}, 3)};
  const SceneHistory scene(tracks, 10.0);
  const auto slots = assign_grid(scene, 1, c);
  // Vehicles 2 and 3 share a cell; 3 is closer to its centre. 4 is off-grid.
  ASSERT_EQ(slots.size(), 1u);
  EXPECT_EQ(slots[0].agent, 3);
}

TEST(Maneuver, Labels) {
  CspConfig c;
  const auto track = straight_track(1, {0, 0}, {1.0, 0}, 30);  // 10 m/s
  std::vector<Vec2> keep, left, brake;
  const Vec2 now = track.last().position();
  for (std::size_t s = 1; s <= 50; ++s) {
    keep.push_back({now.x + 1.0 * s, now.y});
    left.push_back({now.x + 1.0 * s, now.y + 0.08 * s});
    brake.push_back({now.x + 0.5 * s, now.y - 0.08 * s});
  }
  EXPECT_EQ(label_maneuver(track, keep, c), 0u);
  EXPECT_EQ(label_maneuver(track, left, c), 1u);
  EXPECT_EQ(label_maneuver(track, brake, c), 5u);
}

TEST(SocialModel, ParametersValidate) {
  const auto c = testkit::tiny_config();
  auto csp = init_parameters(PolicyKind::CSP, c, 1);
  auto fc = init_parameters(PolicyKind::FCCSP, c, 1);
  EXPECT_NO_THROW(check_parameters(PolicyKind::CSP, csp, c));
  EXPECT_NO_THROW(check_parameters(PolicyKind::FCCSP, fc, c));
  EXPECT_THROW(check_parameters(PolicyKind::FCCSP, csp, c), Error);
  EXPECT_TRUE(init_parameters(PolicyKind::CSP, c, 1) == csp);
  EXPECT_FALSE(init_parameters(PolicyKind::CSP, c, 2) == csp);
}

TEST(SocialModel, ForwardShapesAndTopMode) {
  const auto c = testkit::tiny_config();
  std::mt19937_64 rng(3);
  const auto scene = testkit::random_scene(rng, 5, c);
  const auto params = init_parameters(PolicyKind::CSP, c, 3);
  const auto mix = csp_forward(scene, 0, params, c);
  mix.validate();
  ASSERT_EQ(mix.modes.size(), c.num_modes);
  double total = 0.0;
  for (const auto& m : mix.modes) {
    total += m.weight;
    EXPECT_EQ(m.trajectory.horizon(), c.horizon_steps());
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  const auto top = predict_top_mode(PolicyKind::CSP, scene, 0, nullptr, params, c);
  EXPECT_TRUE(top == select_top_mode(mix));
}

TEST(SocialModel, InsufficientHistoryIsReported) {
  const auto c = testkit::tiny_config();
  const SceneHistory scene({straight_track(1, {0, 0}, {1, 0}, 5)}, 10.0);
  const auto params = init_parameters(PolicyKind::CSP, c, 1);
  EXPECT_THROW(csp_forward(scene, 1, params, c), Error);
}

TEST(SocialModel, EndToEndGradients) {
  for (auto kind : {PolicyKind::CSP, PolicyKind::FCCSP}) {
    const auto r = testkit::model_grad_case(kind, 11);
    EXPECT_TRUE(r.passed()) << to_string(kind) << "\n" << r.summary();
  }
}

TEST(SocialModel, ZeroedFutureBranchMatchesCsp) {
  const auto c = testkit::tiny_config();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto scene = testkit::random_scene(rng, 1 + rng() % 8, c);
    const auto csp = init_parameters(PolicyKind::CSP, c, seed);
    auto fc = init_parameters(PolicyKind::FCCSP, c, seed + 100);
    copy_history_branch(csp, fc, c);
    zero_future_branch(fc, c);
    const auto futures = testkit::random_futures(scene, 0, rng, c);
    const auto a = csp_forward(scene, 0, csp, c);
    const auto b = fccsp_forward(scene, 0, futures, fc, c);
    ASSERT_EQ(a.modes.size(), b.modes.size());
    for (std::size_t m = 0; m < a.modes.size(); ++m) {
      EXPECT_EQ(a.modes[m].weight, b.modes[m].weight);
      EXPECT_TRUE(a.modes[m].trajectory == b.modes[m].trajectory);
    }
  }
}

TEST(SocialModel, FutureBranchMattersWhenTrained) {
  const auto c = testkit::tiny_config();
  std::mt19937_64 rng(5);
  const auto scene = testkit::random_scene(rng, 4, c);
  const auto fc = init_parameters(PolicyKind::FCCSP, c, 5);
  auto f1 = testkit::random_futures(scene, 0, rng, c);
  auto f2 = f1;
  for (auto& [id, t] : f2) {
    for (auto& m : t.means) m.x -= 5.0;
  }
  const auto a = fccsp_forward(scene, 0, f1, fc, c);
  const auto b = fccsp_forward(scene, 0, f2, fc, c);
  EXPECT_FALSE(a.modes[0].trajectory == b.modes[0].trajectory);
}

TEST(Adapters, SaveLoadAndPolicies) {
  const auto c = testkit::tiny_config();
  auto models = std::make_shared<TrainedModels>();
  models->config = c;
  models->csp = init_parameters(PolicyKind::CSP, c, 1);
  models->fccsp = init_parameters(PolicyKind::FCCSP, c, 2);
  const auto path = std::filesystem::temp_directory_path() / "mfrbp_adapters_test.ckpt";
  save_models(path, *models, R"({"seed": 4})");
  const auto loaded = load_models(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(loaded.models.csp == models->csp);
  EXPECT_TRUE(loaded.models.fccsp == models->fccsp);
  EXPECT_EQ(loaded.models.config.decoder_hidden, c.decoder_hidden);
  EXPECT_EQ(nlohmann::json::parse(loaded.metadata)["seed"], 4);

  const auto set = make_policy_set(models);
  std::mt19937_64 rng(1);
  const auto scene = testkit::random_scene(rng, 3, c);
  EXPECT_FALSE(set.csp->future_conditional());
  EXPECT_TRUE(set.fccsp->future_conditional());
  EXPECT_THROW(set.fccsp->predict(scene, 0, nullptr), Error);
  const auto futures = testkit::random_futures(scene, 0, rng, c);
  EXPECT_EQ(set.fccsp->predict(scene, 0, &futures).horizon(), c.horizon_steps());
  EXPECT_EQ(set.cv->predict(scene, 0, nullptr).horizon(), c.horizon_steps());
}

TEST(Training, ShortRunIsDeterministicAndLearns) {
  data::SynthConfig sc;
  sc.scenes = 4;
  const auto ds = data::synthesize_dataset(sc, data::SegmentConfig{});
  const auto groups = data::group_segments(ds, ds.train);
  TrainConfig tc;
  tc.epochs = 3;
  tc.learning_rate = 3e-3;
  const auto c = testkit::tiny_config();
  std::vector<std::size_t> seen;
  const auto a = train_policies(groups, c, tc, 5, [&](std::size_t e, const EpochStats& s) {
    seen.push_back(e);
    EXPECT_EQ(s.examples, ds.train.size());
  });
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2}));
  const auto curve = a.loss_curve();
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_LT(curve.back(), curve.front());
  const auto b = train_policies(groups, c, tc, 5);
  EXPECT_EQ(b.loss_curve(), curve);
  EXPECT_TRUE(b.models.csp == a.models.csp);

  tc.mode = TrainingMode::L1Mfrbp;
  tc.epochs = 1;
  EXPECT_NO_THROW(train_policies(groups, c, tc, 5));
  EXPECT_EQ(training_mode_from_string("l1mfrbp"), TrainingMode::L1Mfrbp);
  EXPECT_THROW(training_mode_from_string("level2"), Error);
}
