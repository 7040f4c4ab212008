#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mfrbp/data/egos.hpp"
#include "mfrbp/data/ngsim.hpp"
#include "mfrbp/data/segments.hpp"
#include "mfrbp/data/split.hpp"
#include "mfrbp/data/synth.hpp"
#include "mfrbp/error.hpp"
#include "mfrbp/policies/cv.hpp"

using namespace mfrbp;
using namespace mfrbp::data;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TrackHistory track_of(AgentId id, Frame first, std::size_t n) {
  std::vector<AgentState> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({1.0 * i, 0.0, first + static_cast<Frame>(i)});
  return TrackHistory(id, std::move(s));
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Ngsim, FixtureRoundTripsByteExactly) {
  const fs::path fixture = fs::path(MFRBP_FIXTURE_DIR) / "ngsim_small.txt";
  const auto parsed = parse_trajectories(fixture);
  EXPECT_EQ(parsed.unit, LengthUnit::Feet);
  ASSERT_EQ(parsed.tracks.size(), 3u);
  for (const auto& t : parsed.tracks) EXPECT_EQ(t.size(), 120u);
  std::ostringstream out;
  write_trajectories(out, parsed.tracks, LengthUnit::Feet);
  EXPECT_EQ(out.str(), slurp(fixture));
}

TEST(Ngsim, AxesAndUnits) {
  std::istringstream in("Vehicle_ID,Frame_ID,Local_X,Local_Y,Lane_ID\n7,1,10,100,2\n7,2,10,101,2\n");
  const auto p = parse_trajectories(in);
  ASSERT_EQ(p.tracks.size(), 1u);
  const auto& s = p.tracks[0].states()[0];
  EXPECT_DOUBLE_EQ(s.x, 100 * kMetersPerFoot);  // longitudinal from local_y
  EXPECT_DOUBLE_EQ(s.y, 10 * kMetersPerFoot);
  std::istringstream m("# units: meters\n7 1 1.5 2.5\n");
  EXPECT_EQ(parse_trajectories(m).tracks[0].states()[0].x, 2.5);
}

TEST(Ngsim, GapsSplitRuns) {
  std::istringstream in("# units: meters\n1 1 0 0\n1 2 0 1\n1 5 0 4\n1 6 0 5\n");
  const auto p = parse_trajectories(in);
  ASSERT_EQ(p.tracks.size(), 2u);
  ASSERT_EQ(p.gaps.size(), 1u);
  EXPECT_EQ(p.gaps[0].last_before, 2);
  EXPECT_EQ(p.gaps[0].first_after, 5);
}

TEST(Ngsim, ErrorsNameTheLine) {
  auto fails_at = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      parse_trajectories(in);
    } catch (const ParseError& e) {
      return e.line() == line;
    }
    return false;
  };
  EXPECT_TRUE(fails_at("1 1 0 0\n1 2 zero 0\n", 2));
  EXPECT_TRUE(fails_at("1 1 0 0\n1 1 0 0\n", 2));
  EXPECT_TRUE(fails_at("1 1 0\n", 1));
  EXPECT_TRUE(fails_at("# units: furlongs\n", 1));
  EXPECT_THROW(parse_trajectories(fs::path("/nonexistent/file.txt")), Error);
}

TEST(Segments, WindowArithmetic) {
  SegmentConfig c;
  EXPECT_EQ(c.history_steps(), 30u);
  EXPECT_EQ(c.horizon_steps(), 50u);
  EXPECT_EQ(c.window_steps(), 80u);
  for (std::size_t n = 0; n < 400; ++n) {
    const std::size_t expect = n < 80 ? 0 : (n - 80) / 10 + 1;
    ASSERT_EQ(window_count(n, c), expect) << n;
    if (n >= 2 && n % 37 == 0) {
      EXPECT_EQ(segment_track(track_of(1, 5, n), "s", c).size(), expect);
    }
  }
  const auto segs = segment_track(track_of(3, 100, 95), "s", c);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].frame, 129);
  EXPECT_EQ(segs[1].frame, 139);
}

TEST(Split, QuarterByVehicle) {
  std::vector<AgentId> ids(41);
  std::iota(ids.begin(), ids.end(), 100);
  ids.push_back(105);  // duplicates collapse
  const auto s = split_vehicles(ids, 3);
  EXPECT_EQ(s.test.size(), 10u);  // round(41 / 4)
  EXPECT_EQ(s.train.size(), 31u);
  for (AgentId t : s.test) EXPECT_FALSE(s.train.count(t));
  const auto again = split_vehicles(ids, 3);
  EXPECT_EQ(again.test, s.test);
  EXPECT_NE(split_vehicles(ids, 4).test, s.test);
}

TEST(Split, SubsetNameChangesSeed) {
  std::vector<AgentId> ids(40);
  std::iota(ids.begin(), ids.end(), 1);
  const auto m = split_train_test({{"a", ids}, {"b", ids}}, 9);
  EXPECT_NE(m.at("a").test, m.at("b").test);
}

TEST(Dataset, BuildGroupsAndPersist) {
  SynthConfig sc;
  sc.scenes = 3;
  const auto ds = synthesize_dataset(sc, SegmentConfig{});
  EXPECT_EQ(ds.train.size() + ds.test.size(), 3u * 12u * 3u);
  const auto split =
      split_train_test({{kSynthSubset, ds.subset(kSynthSubset).vehicle_ids()}}, sc.seed).at(kSynthSubset);
  for (const auto& s : ds.test) EXPECT_TRUE(split.test.count(s.target));
  for (const auto& s : ds.train) EXPECT_TRUE(split.train.count(s.target));

  const auto groups = group_segments(ds, ds.test);
  std::size_t targets = 0;
  for (const auto& g : groups) {
    targets += g.targets.size();
    for (const auto& t : g.targets) {
      EXPECT_TRUE(g.scene.contains(t.agent));
      EXPECT_EQ(t.future.size(), 50u);
    }
  }
  EXPECT_EQ(targets, ds.test.size());

  const auto dir = temp_dir("mfrbp_dataset_test");
  save_dataset(dir, ds);
  const auto back = load_dataset(dir);
  EXPECT_EQ(back.train, ds.train);
  EXPECT_EQ(back.test, ds.test);
  EXPECT_TRUE(back.subset(kSynthSubset).tracks() == ds.subset(kSynthSubset).tracks());
  fs::remove_all(dir);
  EXPECT_THROW(load_dataset(dir), Error);
}

TEST(Synth, DeterministicAndNoiseFreeCvIsExact) {
  SynthConfig sc;
  sc.scenes = 4;
  EXPECT_TRUE(synthesize_traffic(sc).tracks == synthesize_traffic(sc).tracks);
  sc.noise_sigma = 0.0;
  sc.braking_probability = 0.0;
  const auto ds = synthesize_dataset(sc, SegmentConfig{});
  for (const auto* segs : {&ds.train, &ds.test}) {
    for (const auto& g : group_segments(ds, *segs)) {
      for (const auto& t : g.targets) {
        const auto cv = policies::cv_predict(g.scene.track(t.agent), 50, 10.0);
        for (std::size_t s = 0; s < 50; ++s) ASSERT_EQ(cv.means[s], t.future[s]);
      }
    }
  }
}

TEST(Synth, BrakingPropagatesToFollowers) {
  SynthConfig sc;
  sc.scenes = 8;
  sc.braking_probability = 1.0;
  sc.noise_sigma = 0.0;
  const auto traffic = synthesize_traffic(sc);
  ASSERT_EQ(traffic.events.size(), 8u * sc.lanes);
  std::map<AgentId, const TrackHistory*> by_id;
  for (const auto& t : traffic.clean) by_id[t.id()] = &t;
  // The first follower ends up slower than its initial speed.
  std::size_t slowed = 0;
  for (const auto& e : traffic.events) {
    for (const auto& [f, l] : traffic.leader_of) {
      if (l != e.leader) continue;
      const auto s = by_id.at(f)->states();
      const double v0 = s[1].x - s[0].x;
      double vmin = v0;
      for (std::size_t i = 1; i < s.size(); ++i) vmin = std::min(vmin, s[i].x - s[i - 1].x);
      if (vmin < 0.9 * v0) ++slowed;
    }
  }
  EXPECT_EQ(slowed, traffic.events.size());
}

TEST(Egos, GreedyCoverIsCompleteAndSeeded) {
  SynthConfig sc;
  sc.scenes = 4;
  const auto ds = synthesize_dataset(sc, SegmentConfig{});
  const engine::SensorModel sensor{0, 60.0, 0.25};
  for (const auto& g : group_segments(ds, ds.test)) {
    std::vector<AgentId> targets;
    for (const auto& t : g.targets) targets.push_back(t.agent);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto e = sample_egos(g.scene, targets, sensor, seed);
      EXPECT_TRUE(covers_all(g.scene, targets, e.egos, sensor));
      for (AgentId t : targets) {
        const AgentId ev = e.evaluator.at(t);
        EXPECT_NE(std::find(e.egos.begin(), e.egos.end(), ev), e.egos.end());
      }
      EXPECT_EQ(sample_egos(g.scene, targets, sensor, seed).egos, e.egos);
    }
  }
}

TEST(Egos, EligibilityRestrictsEgos) {
  std::vector<TrackHistory> tracks{track_of(1, 0, 3), track_of(2, 0, 3), track_of(3, 0, 3)};
  const SceneHistory scene(tracks, 10.0);
  const engine::SensorModel sensor{0, 60.0, 0.25};
  const std::set<AgentId> eligible{3};
  const auto e = sample_egos(scene, {1, 2}, sensor, 1, &eligible);
  EXPECT_EQ(e.egos, (std::vector<AgentId>{3}));
  EXPECT_FALSE(e.self_covered(1));
}
