#include "mfrbp/data/segments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <tuple>

#include "mfrbp/data/ngsim.hpp"
#include "mfrbp/data/split.hpp"
#include "mfrbp/error.hpp"

namespace mfrbp::data {
namespace {

std::size_t whole_steps(double seconds, double rate, const char* what) {
  const double steps = seconds * rate;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 || rounded < 1.0) {
    throw Error(std::string(what) + " of " + std::to_string(seconds) + " s is not a whole " +
                "number of frames at " + std::to_string(rate) + " Hz");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

std::size_t SegmentConfig::history_steps() const {
  return whole_steps(history_s, sample_rate, "history");
}
std::size_t SegmentConfig::horizon_steps() const {
  return whole_steps(horizon_s, sample_rate, "horizon");
}
std::size_t SegmentConfig::stride_steps() const {
  return whole_steps(stride_s, sample_rate, "stride");
}

void SegmentConfig::validate() const {
  if (!(sample_rate > 0.0)) throw Error("sample rate must be positive");
  (void)history_steps();
  (void)horizon_steps();
  (void)stride_steps();
}

std::size_t window_count(std::size_t frames, const SegmentConfig& config) {
  const std::size_t w = config.window_steps();
  if (frames < w) return 0;
  return (frames - w) / config.stride_steps() + 1;
}

std::vector<Segment> segment_track(const TrackHistory& track, const std::string& subset,
                                   const SegmentConfig& config) {
  std::vector<Segment> out;
  const std::size_t n = window_count(track.size(), config);
  const auto hist = static_cast<Frame>(config.history_steps());
  const auto stride = static_cast<Frame>(config.stride_steps());
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({subset, track.id(), track.first_frame() + static_cast<Frame>(i) * stride + hist - 1});
  }
  return out;
}

TrackSet::TrackSet(std::vector<TrackHistory> tracks) : tracks_(std::move(tracks)) {
  std::stable_sort(tracks_.begin(), tracks_.end(), [](const TrackHistory& a, const TrackHistory& b) {
    return a.id() != b.id() ? a.id() < b.id() : a.first_frame() < b.first_frame();
  });
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    auto& runs = runs_[tracks_[i].id()];
    if (!runs.empty() && tracks_[runs.back()].last_frame() >= tracks_[i].first_frame()) {
      throw Error("overlapping runs for vehicle " + std::to_string(tracks_[i].id()));
    }
    runs.push_back(i);
  }
}

std::vector<AgentId> TrackSet::vehicle_ids() const {
  std::vector<AgentId> ids;
  for (const auto& [id, runs] : runs_) ids.push_back(id);
  return ids;
}

const TrackHistory* TrackSet::covering(AgentId agent, Frame first, Frame last) const {
  auto it = runs_.find(agent);
  if (it == runs_.end()) return nullptr;
  for (std::size_t i : it->second) {
    const auto& t = tracks_[i];
    if (t.first_frame() <= first && t.last_frame() >= last) return &t;
  }
  return nullptr;
}

SceneHistory TrackSet::scene_at(Frame frame, std::size_t history_steps, double sample_rate) const {
  const Frame first = frame - static_cast<Frame>(history_steps) + 1;
  std::vector<TrackHistory> present;
  for (const auto& t : tracks_) {
    if (t.first_frame() <= first && t.last_frame() >= frame) {
      present.push_back(t.truncated_to(frame).tail(history_steps));
    }
  }
  if (present.empty()) throw Error("no agent observed at frame " + std::to_string(frame));
  return SceneHistory(std::move(present), sample_rate);
}

std::optional<std::vector<Vec2>> TrackSet::future(AgentId agent, Frame frame,
                                                  std::size_t horizon_steps) const {
  const TrackHistory* t = covering(agent, frame + 1, frame + static_cast<Frame>(horizon_steps));
  if (t == nullptr) return std::nullopt;
  std::vector<Vec2> out;
  out.reserve(horizon_steps);
  const auto states = t->states();
  const auto offset = static_cast<std::size_t>(frame + 1 - t->first_frame());
  for (std::size_t s = 0; s < horizon_steps; ++s) out.push_back(states[offset + s].position());
  return out;
}

const TrackSet& Dataset::subset(const std::string& name) const {
  auto it = subsets.find(name);
  if (it == subsets.end()) throw Error("dataset has no subset '" + name + "'");
  return it->second;
}

Dataset build_dataset(std::map<std::string, std::vector<TrackHistory>> tracks,
                      const SegmentConfig& config, std::uint64_t split_seed) {
  config.validate();
  Dataset ds;
  ds.segments = config;
  std::map<std::string, std::vector<AgentId>> ids;
  for (auto& [name, list] : tracks) {
    for (const auto& t : list) ids[name].push_back(t.id());
    ds.subsets.emplace(name, TrackSet(std::move(list)));
  }
  const auto split = split_train_test(ids, split_seed);
  for (const auto& [name, set] : ds.subsets) {
    const auto& s = split.at(name);
    for (const auto& t : set.tracks()) {
      auto segs = segment_track(t, name, config);
      auto& dst = s.test.count(t.id()) ? ds.test : ds.train;
      dst.insert(dst.end(), segs.begin(), segs.end());
    }
  }
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
  return ds;
}

std::vector<SceneGroup> group_segments(const Dataset& dataset,
                                       const std::vector<Segment>& segments) {
  std::map<std::pair<std::string, Frame>, std::vector<AgentId>> keyed;
  for (const auto& s : segments) keyed[{s.subset, s.frame}].push_back(s.target);
  const auto& cfg = dataset.segments;
  std::vector<SceneGroup> groups;
  groups.reserve(keyed.size());
  for (auto& [key, targets] : keyed) {
    const auto& set = dataset.subset(key.first);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    SceneGroup g{key.first, key.second,
                 set.scene_at(key.second, cfg.history_steps(), cfg.sample_rate), {}};
    for (AgentId id : targets) {
      auto future = set.future(id, key.second, cfg.horizon_steps());
      if (!future || !g.scene.contains(id)) {
        throw Error("segment for vehicle " + std::to_string(id) + " at frame " +
                    std::to_string(key.second) + " in '" + key.first + "' lacks full coverage");
      }
      g.targets.push_back({id, std::move(*future)});
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

namespace {

using nlohmann::json;

void check_subset_name(const std::string& name) {
  const bool ok = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
  if (!ok || name.front() == '.') {
    throw Error("subset name '" + name + "' cannot be used as a file name");
  }
}

json segments_json(const std::vector<Segment>& segs) {
  json out = json::array();
  for (const auto& s : segs) out.push_back(json::array({s.subset, s.target, s.frame}));
  return out;
}

std::vector<Segment> segments_from_json(const json& j) {
  std::vector<Segment> out;
  for (const auto& e : j) {
    out.push_back({e.at(0).get<std::string>(), e.at(1).get<AgentId>(), e.at(2).get<Frame>()});
  }
  return out;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  json j;
  j["format"] = "mfrbp-dataset";
  j["version"] = kDatasetVersion;
  j["segments"] = {{"sample_rate", dataset.segments.sample_rate},
                   {"history_s", dataset.segments.history_s},
                   {"horizon_s", dataset.segments.horizon_s},
                   {"stride_s", dataset.segments.stride_s}};
  json subsets = json::array();
  for (const auto& [name, set] : dataset.subsets) {
    check_subset_name(name);
    const std::string file = name + ".tracks";
    write_trajectories(dir / file, set.tracks(), LengthUnit::Meters);
    subsets.push_back({{"name", name}, {"file", file}});
  }
  j["subsets"] = subsets;
  j["train"] = segments_json(dataset.train);
  j["test"] = segments_json(dataset.test);
  std::ofstream out(dir / "dataset.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "dataset.json").string());
  out << j.dump(1) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "dataset.json";
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  Dataset ds;
  try {
    const json j = json::parse(in);
    if (j.at("format") != "mfrbp-dataset") throw Error("not a dataset file");
    if (j.at("version").get<int>() != kDatasetVersion) {
      throw Error("unsupported dataset version " + j.at("version").dump());
    }
    const auto& sc = j.at("segments");
    ds.segments.sample_rate = sc.at("sample_rate").get<double>();
    ds.segments.history_s = sc.at("history_s").get<double>();
    ds.segments.horizon_s = sc.at("horizon_s").get<double>();
    ds.segments.stride_s = sc.at("stride_s").get<double>();
    ds.segments.validate();
    for (const auto& s : j.at("subsets")) {
      const auto name = s.at("name").get<std::string>();
      check_subset_name(name);
      auto parsed = parse_trajectories(dir / s.at("file").get<std::string>());
      ds.subsets.emplace(name, TrackSet(std::move(parsed.tracks)));
    }
    ds.train = segments_from_json(j.at("train"));
    ds.test = segments_from_json(j.at("test"));
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace mfrbp::data
