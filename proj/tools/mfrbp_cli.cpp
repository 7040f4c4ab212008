// mfrbp: dataset generation, training, prediction and evaluation.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfrbp/config_io.hpp"
#include "mfrbp/data/ngsim.hpp"
#include "mfrbp/data/segments.hpp"
#include "mfrbp/data/synth.hpp"
#include "mfrbp/engine/mfrbp.hpp"
#include "mfrbp/engine/strategies.hpp"
#include "mfrbp/error.hpp"
#include "mfrbp/eval/artifacts.hpp"
#include "mfrbp/eval/experiments.hpp"
#include "mfrbp/eval/manifest.hpp"
#include "mfrbp/eval/reference.hpp"
#include "mfrbp/policies/adapters.hpp"
#include "mfrbp/policies/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfrbp;

namespace {

constexpr const char* kOutRootEnv = "MFRBP_OUT_ROOT";

/// Explicit path, else $MFRBP_OUT_ROOT/<leaf>, else ./out/<leaf>.
fs::path resolve_out(const std::string& given, const std::string& leaf) {
  if (!given.empty()) return given;
  const char* root = std::getenv(kOutRootEnv);
  return fs::path(root && *root ? root : "out") / leaf;
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

/// Hashes every listed output file in `dir`.
std::map<std::string, std::string> hash_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    out[rel] = eval::sha256_file(entry.path());
  }
  return out;
}

json model_metadata(const std::string& metadata) {
  try {
    return json::parse(metadata);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint metadata is not JSON: ") + e.what());
  }
}

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  auto cfg = load_config(a.config);
  cfg.synth.seed = a.seed;
  cfg.validate();
  const auto dir = resolve_out(a.out, "data");
  const auto dataset = data::synthesize_dataset(cfg.synth, cfg.segments);
  data::save_dataset(dir, dataset);

  eval::RunManifest m;
  m.command = "synth";
  m.seed = a.seed;
  m.config_sha256 = eval::sha256_hex(canonical_json(cfg));
  m.fields["train_segments"] = std::to_string(dataset.train.size());
  m.fields["test_segments"] = std::to_string(dataset.test.size());
  m.outputs = hash_outputs(dir);
  eval::write_manifest(dir / "manifest.json", m);
  std::cout << "wrote " << dataset.train.size() << " train and " << dataset.test.size()
            << " test segments to " << dir.string() << "\n";
}

// ---- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> files;
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
};

void run_ingest(const IngestArgs& a) {
  const auto cfg = load_config(a.config);
  cfg.validate();
  std::map<std::string, std::vector<TrackHistory>> subsets;
  for (const auto& f : a.files) {
    const auto name = fs::path(f).stem().string();
    if (subsets.count(name)) throw Error("two input files share the subset name '" + name + "'");
    auto parsed = data::parse_trajectories(fs::path(f));
    for (const auto& g : parsed.gaps) {
      std::cerr << f << ": vehicle " << g.vehicle_id << " missing frames " << g.last_before + 1
                << ".." << g.first_after - 1 << "; split into separate runs\n";
    }
    subsets.emplace(name, std::move(parsed.tracks));
  }
  const auto dir = resolve_out(a.out, "data");
  const auto dataset = data::build_dataset(std::move(subsets), cfg.segments, a.seed);
  data::save_dataset(dir, dataset);

  eval::RunManifest m;
  m.command = "ingest";
  m.seed = a.seed;
  m.config_sha256 = eval::sha256_hex(canonical_json(cfg));
  for (const auto& f : a.files) m.fields["input:" + fs::path(f).filename().string()] = eval::sha256_file(f);
  m.fields["train_segments"] = std::to_string(dataset.train.size());
  m.fields["test_segments"] = std::to_string(dataset.test.size());
  m.outputs = hash_outputs(dir);
  eval::write_manifest(dir / "manifest.json", m);
  std::cout << "wrote " << dataset.train.size() << " train and " << dataset.test.size()
            << " test segments to " << dir.string() << "\n";
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string config;
  std::uint64_t seed = 1;
  std::string ckpt_out;
};

void run_train(const TrainArgs& a) {
  const auto cfg = load_config(a.config);
  cfg.validate();
  const auto dataset = data::load_dataset(a.data);
  if (dataset.segments.sample_rate != cfg.model.sample_rate) {
    throw Error("dataset is sampled at " + std::to_string(dataset.segments.sample_rate) +
                " Hz but the model config expects " + std::to_string(cfg.model.sample_rate) + " Hz");
  }
  if (dataset.train.empty()) throw Error(a.data + ": dataset has no training segments");
  const auto groups = data::group_segments(dataset, dataset.train);
  std::cerr << "training on " << dataset.train.size() << " segments in " << groups.size()
            << " scenes\n";
  const auto result = policies::train_policies(
      groups, cfg.model, cfg.train, a.seed, [&](std::size_t epoch, const policies::EpochStats& s) {
        std::fprintf(stderr, "epoch %zu  loss %.6f  (csp nll %.4f  fccsp nll %.4f)\n", epoch,
                     s.total, s.csp_nll, s.fccsp_nll);
      });

  const fs::path ckpt = a.ckpt_out.empty() ? resolve_out("", "model.ckpt") : fs::path(a.ckpt_out);
  if (ckpt.has_parent_path()) ensure_dir(ckpt.parent_path());
  json meta;
  meta["seed"] = a.seed;
  meta["train"] = to_json(cfg.train);
  meta["config_sha256"] = eval::sha256_hex(canonical_json(cfg));
  meta["data_sha256"] = eval::sha256_directory(a.data);
  meta["loss_curve"] = result.loss_curve();
  policies::save_models(ckpt, result.models, meta.dump());
  std::cout << "wrote " << ckpt.string() << "\n";
}

// ---- predict ----------------------------------------------------------------

struct PredictArgs {
  std::string ckpt;
  std::string scene;
  std::string strategy = "l1rbp";
  std::string out;
  std::optional<Frame> frame;
  std::optional<AgentId> ego;
  double sensor_range = 60.0;
  double periphery_fraction = 0.25;
};

json trajectory_json(const TrajectoryGaussian& t) {
  json means = json::array(), covs = json::array();
  for (const auto& m : t.means) means.push_back({m.x, m.y});
  for (const auto& c : t.covariances) covs.push_back({c.xx, c.xy, c.yy});
  return {{"means", means}, {"covariances", covs}};
}

void run_predict(const PredictArgs& a) {
  auto loaded = policies::load_models(a.ckpt);
  const auto models = std::make_shared<const policies::TrainedModels>(std::move(loaded.models));
  const auto& config = models->config;
  const auto policy_set = policies::make_policy_set(models);

  const auto parsed = data::parse_trajectories(fs::path(a.scene));
  const data::TrackSet tracks(parsed.tracks);
  if (tracks.tracks().empty()) throw Error(a.scene + ": no trajectories");
  const std::size_t hist = config.history_steps();
  const std::size_t horizon = config.horizon_steps();

  Frame frame = 0;
  if (a.frame) {
    frame = *a.frame;
  } else {
    // Latest frame at which some vehicle has a full history.
    bool found = false;
    for (const auto& t : tracks.tracks()) {
      if (t.size() >= hist && (!found || t.last_frame() > frame)) {
        frame = t.last_frame();
        found = true;
      }
    }
    if (!found) throw Error(a.scene + ": no vehicle has " + std::to_string(hist) + " frames of history");
  }
  const auto scene = tracks.scene_at(frame, hist, config.sample_rate);
  if (scene.size() == 0) throw Error("no vehicle has a full history at frame " + std::to_string(frame));

  const AgentId ego = a.ego ? *a.ego : scene.agent_ids().front();
  engine::SensorModel sensor{ego, a.sensor_range, a.periphery_fraction};
  std::optional<engine::FilteredAssignment> filtered;
  if (a.strategy == "l1rbp") {
    filtered = engine::FilteredAssignment{scene, engine::make_l1_rbp(scene, policy_set)};
  } else {
    if (!scene.contains(ego)) {
      throw Error("ego " + std::to_string(ego) + " has no full history at frame " + std::to_string(frame));
    }
    if (a.strategy == "l1mfrbp") {
      filtered = engine::make_l1_mfrbp(scene, sensor, policy_set);
    } else {
      const auto plan = tracks.future(ego, frame, horizon);
      if (!plan) {
        throw Error("planning strategy needs the ego's next " + std::to_string(horizon) +
                    " frames in the scene file");
      }
      filtered = engine::make_planning_aware(scene, sensor, *plan, horizon, policy_set);
    }
  }
  const auto run = engine::run_mfrbp(filtered->scene, filtered->assignment);

  json agents = json::object();
  for (const auto& [id, levels] : run.trace.entries()) {
    json entry;
    entry["level"] = levels.size() - 1;
    entry["prediction"] = trajectory_json(run.predictions.at(id));
    json lv = json::array();
    for (const auto& t : levels) lv.push_back(trajectory_json(t));
    entry["levels"] = lv;
    agents[std::to_string(id)] = entry;
  }
  json doc;
  doc["strategy"] = a.strategy;
  doc["frame"] = frame;
  if (a.strategy != "l1rbp") doc["ego"] = ego;
  doc["sample_rate"] = config.sample_rate;
  doc["units"] = "meters";
  doc["agents"] = agents;

  const auto dir = resolve_out(a.out, "predict");
  ensure_dir(dir);
  write_text(dir / "predictions.json", doc.dump(2) + "\n");
  eval::RunManifest m;
  m.command = "predict";
  m.checkpoint_sha256 = eval::sha256_file(a.ckpt);
  m.data_sha256 = eval::sha256_file(a.scene);
  m.fields["strategy"] = a.strategy;
  m.fields["frame"] = std::to_string(frame);
  m.outputs = hash_outputs(dir);
  eval::write_manifest(dir / "manifest.json", m);
  std::cout << "predicted " << run.predictions.size() << " vehicles at frame " << frame << "; wrote "
            << (dir / "predictions.json").string() << "\n";
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  int experiment = 1;
  std::string data;
  std::string ckpt;
  std::uint64_t seed = 1;
  std::size_t passes = 10;
  std::string out;
  std::string config;
};

void run_eval(const EvalArgs& a) {
  const auto cfg = load_config(a.config);
  cfg.validate();
  auto loaded = policies::load_models(a.ckpt);
  const auto meta = model_metadata(loaded.metadata);
  const auto models = std::make_shared<const policies::TrainedModels>(std::move(loaded.models));
  const auto dataset = data::load_dataset(a.data);

  eval::ExperimentOptions opt;
  opt.experiment = a.experiment;
  opt.seed = a.seed;
  opt.passes = a.experiment == 1 ? 1 : a.passes;
  opt.sensor_range = cfg.sensor.range;
  opt.periphery_fraction = cfg.sensor.periphery_fraction;
  const auto result = eval::run_experiment(dataset, models, opt);

  std::vector<double> loss_curve;
  if (meta.contains("loss_curve")) loss_curve = meta["loss_curve"].get<std::vector<double>>();
  const auto dir = resolve_out(a.out, "eval" + std::to_string(a.experiment));
  eval::emit_artifacts(dir, result, loss_curve, models->config.sample_rate);

  json run_cfg;
  run_cfg["experiment"] = a.experiment;
  run_cfg["passes"] = opt.passes;
  run_cfg["sensor"] = to_json(cfg.sensor);
  run_cfg["model"] = to_json(models->config);
  eval::RunManifest m;
  m.command = "eval";
  m.seed = a.seed;
  m.config_sha256 = eval::sha256_hex(run_cfg.dump());
  m.checkpoint_sha256 = eval::sha256_file(a.ckpt);
  m.data_sha256 = eval::sha256_directory(a.data);
  m.fields["experiment"] = std::to_string(a.experiment);
  m.fields["passes"] = std::to_string(opt.passes);
  m.fields["egos"] = std::to_string(result.egos);
  m.fields["self_covered"] = std::to_string(result.self_covered);
  m.outputs = hash_outputs(dir);
  eval::write_manifest(dir / "manifest.json", m);

  std::cout << "RMSE in meters (experiment " << a.experiment << ")\n";
  std::cout << "horizon_s\tfinal\tlevel0\tcv\tcount\n";
  for (std::size_t i = 0; i < result.table.rows.size(); ++i) {
    const auto& r = result.table.rows[i];
    std::printf("%.0f\t%.4f\t%.4f\t%.4f\t%zu\n", r.horizon_s, r.rmse, result.level0.rows[i].rmse,
                result.cv.rows[i].rmse, r.count);
  }
  std::cout << "wrote " << dir.string() << "\n";
}

// ---- report -----------------------------------------------------------------

struct ReportArgs {
  std::string results;
  std::string reference = "l1rbp";
};

void run_report(const ReportArgs& a) {
  std::cout << eval::reference_compare(eval::read_results_table(a.results), a.reference);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity recursive behavior prediction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic interactive traffic dataset");
  s->add_option("--config", synth.config, "JSON config file")->check(CLI::ExistingFile);
  s->add_option("--seed", synth.seed, "Generator and split seed");
  s->add_option("--out", synth.out, "Dataset directory");

  IngestArgs ingest;
  auto* in = app.add_subcommand("ingest", "Convert NGSIM-format trajectory files to a dataset");
  in->add_option("--ngsim", ingest.files, "Trajectory files (one subset each)")
      ->required()
      ->check(CLI::ExistingFile);
  in->add_option("--config", ingest.config, "JSON config file (segments section)")
      ->check(CLI::ExistingFile);
  in->add_option("--seed", ingest.seed, "Train/test split seed");
  in->add_option("--out", ingest.out, "Dataset directory");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Jointly train CSP and FC-CSP");
  t->add_option("--data", train.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--config", train.config, "JSON config file")->check(CLI::ExistingFile);
  t->add_option("--seed", train.seed, "Initialisation and shuffling seed");
  t->add_option("--ckpt-out", train.ckpt_out, "Checkpoint path");

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Predict every vehicle of one scene");
  p->add_option("--ckpt", predict.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  p->add_option("--scene", predict.scene, "NGSIM-format trajectory file")
      ->required()
      ->check(CLI::ExistingFile);
  p->add_option("--strategy", predict.strategy, "Reasoning strategy")
      ->check(CLI::IsMember({"l1rbp", "l1mfrbp", "planning"}));
  p->add_option("--out", predict.out, "Output directory");
  p->add_option("--frame", predict.frame, "Present frame (default: latest with a full history)");
  p->add_option("--ego", predict.ego, "Ego vehicle for l1mfrbp/planning (default: lowest id)");
  p->add_option("--sensor-range", predict.sensor_range, "Ego sensor range (m)");
  p->add_option("--periphery", predict.periphery_fraction, "Peripheral band fraction");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Run an experiment on the test split");
  e->add_option("--experiment", ev.experiment, "1: L1-RBP, 2: L1-MFRBP, 3: planning-aware")
      ->required()
      ->check(CLI::IsMember({1, 2, 3}));
  e->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--ckpt", ev.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--seed", ev.seed, "Ego sampling seed");
  e->add_option("--passes", ev.passes, "Passes over the test set (experiments 2 and 3)")
      ->check(CLI::PositiveNumber);
  e->add_option("--out", ev.out, "Results directory");
  e->add_option("--config", ev.config, "JSON config file (sensor section)")->check(CLI::ExistingFile);

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Compare a results table with a published column");
  r->add_option("--results", report.results, "Results directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  r->add_option("--reference", report.reference, "Reference column")
      ->check(CLI::IsMember({"cspdag", "cspstar", "l1rbp", "l1mfrbp", "planning"}));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*s) run_synth(synth);
    if (*in) run_ingest(ingest);
    if (*t) run_train(train);
    if (*p) run_predict(predict);
    if (*e) run_eval(ev);
    if (*r) run_report(report);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
