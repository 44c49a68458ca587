#include "sgf/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <opencv2/core/version.hpp>
#include <opencv2/imgcodecs.hpp>

#include "sgf/api/http.hpp"
#include "sgf/api/service.hpp"
#include "sgf/cli/config.hpp"
#include "sgf/common/csv.hpp"
#include "sgf/common/error.hpp"
#include "sgf/coverage/maps.hpp"
#include "sgf/coverage/predictions.hpp"
#include "sgf/datastore/consensus.hpp"
#include "sgf/datastore/splits.hpp"
#include "sgf/datastore/store.hpp"
#include "sgf/harness/checkpoint.hpp"
#include "sgf/harness/trainer.hpp"
#include "sgf/ingest/manifest.hpp"
#include "sgf/ingest/sidecar.hpp"
#include "sgf/quality/agreement.hpp"

#ifndef SGF_VERSION
#define SGF_VERSION "0.0.0"
#endif

namespace sgf::cli {
namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingPrerequisiteError*>(&e) || dynamic_cast<const LoadError*>(&e)) return 3;
  if (dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const CLI::ParseError*>(&e))
    return 2;
  return 4;
}

namespace {

// Values gathered from the command line before dispatch.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<bool> enhance;
  std::optional<double> threshold;
  std::optional<int> r;
  std::optional<int> stride;
  std::string out;

  std::string transects;
  std::string transect;
  std::string plan = "final";
  std::string experiment;
  std::string name;
  std::string split;
  std::string checkpoint;
  std::string annotations;
  std::string tags;
  std::string input;
  std::string expert;
  double expert_offset_s = 0.0;
  std::optional<double> fps;
  std::optional<double> cell;
  std::optional<double> bin;
  std::optional<int> port;
  bool use_probability = false;
  bool plan_given = false;
};

struct Context {
  ProjectConfig config;
  Layout layout;
  Flags flags;
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> artifacts;

  void produced(const fs::path& p) { artifacts.push_back(p.string()); }
  void warn(const std::string& msg) { err << "warning: " << msg << '\n'; }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void require(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p))
    throw MissingPrerequisiteError(p.string() + " not found; run `sgf " + producer + "` first");
}

std::vector<ManifestEntry> load_manifest(const Context& ctx, bool enhanced) {
  const auto path = enhanced ? ctx.layout.enhanced_manifest() : ctx.layout.manifest();
  require(path, enhanced ? "enhance" : "extract");
  return read_manifest(path);
}

std::vector<std::string> selected_transects(const Context& ctx) {
  if (!ctx.flags.transects.empty()) return split_list(ctx.flags.transects);
  if (!ctx.flags.transect.empty()) return {ctx.flags.transect};
  std::vector<std::string> ids;
  for (const auto& t : ctx.config.transects) ids.push_back(t.descriptor.transect_id);
  if (ids.empty()) throw ValidationError("no transects configured");
  return ids;
}

CropRect crop_for(const ProjectConfig& c, cv::Size source) {
  if (c.crop) return *c.crop;
  CropRect r;
  r.x = std::max(0, (source.width - kFrameWidth) / 2);
  r.y = std::max(0, (source.height - kFrameHeight) / 2);
  return r;
}

// Nearest fix by frame index within the join window.
std::optional<GeoFix> nearest_fix(const GeoFixTable& fixes, std::int64_t frame, double fps, double max_s) {
  if (fixes.empty()) return std::nullopt;
  auto it = fixes.lower_bound(frame);
  const GeoFix* best = nullptr;
  std::int64_t best_d = 0;
  if (it != fixes.end()) {
    best = &it->second;
    best_d = it->first - frame;
  }
  if (it != fixes.begin()) {
    auto prev = std::prev(it);
    if (!best || frame - prev->first <= best_d) {
      best = &prev->second;
      best_d = frame - prev->first;
    }
  }
  if (double(best_d) / fps > max_s) return std::nullopt;
  return *best;
}

GeoFixTable load_fixes(Context& ctx, const TransectConfig& t) {
  if (!t.sidecar) return {};
  auto load = load_sidecar_geofixes(*t.sidecar);
  for (const auto& w : load.warnings) ctx.warn(t.descriptor.transect_id + ": " + w);
  if (load.skipped_rows)
    ctx.warn(t.descriptor.transect_id + ": skipped " + std::to_string(load.skipped_rows) + " sidecar rows");
  return std::move(load.fixes);
}

// ---- extract ---------------------------------------------------------------

void cmd_extract(Context& ctx) {
  const double fps = ctx.flags.fps.value_or(ctx.config.extract_fps);
  const auto ids = selected_transects(ctx);
  std::vector<ManifestEntry> kept;
  if (fs::exists(ctx.layout.manifest()))
    for (auto& e : read_manifest(ctx.layout.manifest()))
      if (std::find(ids.begin(), ids.end(), e.transect_id) == ids.end()) kept.push_back(std::move(e));

  const std::uint64_t seed = ctx.flags.seed.value_or(ctx.config.default_seed);
  for (const auto& id : ids) {
    const auto& t = ctx.config.transect(id);
    const auto& d = t.descriptor;
    require(d.video_path, "extract (configure transects[].video)");
    const auto fixes = load_fixes(ctx, t);

    ExtractOptions options;
    options.excluded_image_ids.insert(t.excluded_image_ids.begin(), t.excluded_image_ids.end());
    const int stride = frame_stride(d.native_fps, fps);
    if (t.sample_count) {
      VideoFileSource counter(d.video_path);
      const std::int64_t seen = for_each_frame(counter, d, fps, crop_for(ctx.config, counter.frame_size()),
                                               [](FrameRecord&&) {}, {{}, [](std::int64_t) { return false; }});
      const std::int64_t population = expected_frame_count(seen, stride);
      const auto count = std::min<std::size_t>(*t.sample_count, static_cast<std::size_t>(population));
      std::set<std::int64_t> chosen;
      for (auto p : sample_positions(static_cast<std::size_t>(population), count, seed))
        chosen.insert(static_cast<std::int64_t>(p) * stride);
      options.keep = [chosen](std::int64_t idx) { return chosen.count(idx) > 0; };
    }

    VideoFileSource source(d.video_path);
    const CropRect crop = crop_for(ctx.config, source.frame_size());
    std::size_t n = 0;
    const auto dir = ctx.layout.frames(id);
    for_each_frame(source, d, fps, crop, [&](FrameRecord&& f) {
      f.geo = nearest_fix(fixes, f.frame_index, d.native_fps, ctx.config.geo_max_join_s);
      kept.push_back(store_frame(f, dir));
      ++n;
    }, options);
    ctx.out << id << ": " << n << " frames (stride " << stride << ")\n";
    ctx.produced(dir);
  }
  fs::create_directories(ctx.layout.root);
  write_manifest(ctx.layout.manifest(), kept);
  ctx.produced(ctx.layout.manifest());
}

// ---- enhance ---------------------------------------------------------------

void cmd_enhance(Context& ctx) {
  const auto& spec = ctx.config.enhancement;
  if (!spec.enabled())
    throw ValidationError("enhancement is disabled; configure enhancement.model_path and pass --enhance");
  auto manifest = load_manifest(ctx, false);
  auto enhancer = make_enhancer(spec);
  EnhancementCache cache(ctx.layout.enhanced(), *enhancer);
  for (auto& e : manifest) {
    const cv::Mat px = cv::imread(e.file_path, cv::IMREAD_COLOR);
    if (px.empty()) throw DecodeError("cannot decode " + e.file_path);
    cache.get_or_compute(e.image_id, px);
    e.file_path = cache.entry_path(e.image_id).string();
    e.enhancement = enhancer->fingerprint();
  }
  write_manifest(ctx.layout.enhanced_manifest(), manifest);
  ctx.out << "enhanced " << manifest.size() << " images (" << cache.hits() << " cached, " << cache.misses()
          << " computed)\n";
  ctx.produced(ctx.layout.enhanced_manifest());
}

// ---- split -----------------------------------------------------------------

std::vector<AnnotationRecord> load_annotations(const Context& ctx, const std::vector<ManifestEntry>& manifest) {
  if (!ctx.flags.annotations.empty()) {
    std::ifstream in(ctx.flags.annotations);
    if (!in) throw MissingPrerequisiteError("annotations file not found: " + ctx.flags.annotations);
    return read_annotations_csv(in);
  }
  require(ctx.layout.annotation_log(), "serve (collect annotations) or pass --annotations");
  AnnotationStore store(ImageRegistry::from_manifest(manifest),
                        {ctx.layout.annotation_log(), ctx.config.leaderboard_counts_invalid});
  return store.snapshot();
}

ExperimentPlan resolve_plan(const Context& ctx, const std::string& name) {
  if (name == "cross-val" || name == "cross_val") {
    const auto ts = split_list(ctx.flags.transects);
    return ts.empty() ? leave_one_transect_out_plan() : leave_one_transect_out_plan(ts);
  }
  if (fs::exists(name) && fs::is_regular_file(name)) {
    std::ifstream in(name);
    return plan_from_json(json::parse(in));
  }
  return builtin_plan(name);
}

std::vector<CompiledExperiment> compile_and_write(Context& ctx, const ExperimentPlan& plan) {
  const auto manifest = load_manifest(ctx, false);
  const auto consensus = compute_consensus(load_annotations(ctx, manifest));
  const std::uint64_t seed = ctx.flags.seed.value_or(ctx.config.default_seed);
  auto experiments = compile_splits(manifest, consensus, plan, seed);
  json summary = json::array();
  for (const auto& e : experiments)
    for (const auto* s : e.splits()) {
      const auto path = ctx.layout.split_file(plan.plan_id, e.id, s->name);
      write_split(path, *s);
      ctx.produced(path);
      ctx.out << std::left << std::setw(22) << s->name << " " << std::setw(8) << e.id << std::right
              << std::setw(7) << s->image_ids.size() << "  present " << std::fixed << std::setprecision(1)
              << 100.0 * s->class_balance << "%\n";
      summary.push_back({{"experiment", e.id},
                         {"name", s->name},
                         {"role", to_string(s->role)},
                         {"n_images", s->image_ids.size()},
                         {"class_balance", s->class_balance},
                         {"transects", s->transect_ids}});
    }
  std::ofstream(ctx.layout.splits(plan.plan_id) / "summary.json") << summary.dump(2) << '\n';
  return experiments;
}

void cmd_split(Context& ctx) { compile_and_write(ctx, resolve_plan(ctx, ctx.flags.plan)); }

// ---- train / eval ------------------------------------------------------------

bool enhancement_on(const Context& ctx) { return ctx.config.enhancement.enabled(); }

std::vector<LabelledImage> load_images(const DatasetSplit& split, const std::vector<ManifestEntry>& manifest,
                                       std::vector<std::string>* failures = nullptr) {
  std::unordered_map<std::string, const ManifestEntry*> by_id;
  for (const auto& m : manifest) by_id.emplace(m.image_id, &m);
  if (split.labels.size() != split.image_ids.size())
    throw FormatError("split " + split.name + " carries no labels; rerun `sgf split`");
  std::vector<LabelledImage> out;
  for (std::size_t i = 0; i < split.image_ids.size(); ++i) {
    const auto& id = split.image_ids[i];
    auto it = by_id.find(id);
    if (it == by_id.end()) throw MissingPrerequisiteError("image " + id + " missing from manifest");
    cv::Mat px = cv::imread(it->second->file_path, cv::IMREAD_COLOR);
    if (px.empty()) {
      if (!failures) throw DecodeError("cannot decode " + it->second->file_path);
      failures->push_back(id);
      continue;
    }
    out.push_back({id, std::move(px), split.labels[i]});
  }
  return out;
}

DatasetSplit find_split(const Context& ctx, const std::string& plan, const std::string& experiment,
                        const std::string& name) {
  if (!experiment.empty()) {
    const auto p = ctx.layout.split_file(plan, experiment, name);
    require(p, "split --plan " + plan);
    return read_split(p);
  }
  std::vector<fs::path> hits;
  if (fs::exists(ctx.layout.root / "splits"))
    for (const auto& e : fs::recursive_directory_iterator(ctx.layout.root / "splits"))
      if (e.is_regular_file() && e.path().filename() == name + ".json" &&
          (plan.empty() || e.path().parent_path().parent_path().filename() == plan))
        hits.push_back(e.path());
  if (hits.empty()) throw MissingPrerequisiteError("split " + name + " not found; run `sgf split` first");
  if (hits.size() > 1) throw ArgumentError("split " + name + " is ambiguous; pass --plan and --experiment");
  return read_split(hits.front());
}

std::string default_experiment(const ExperimentPlan& plan, const std::string& requested) {
  if (!requested.empty()) return requested;
  if (plan.experiments.empty()) throw ValidationError("plan has no experiments");
  return plan.experiments.front().id;
}

metrics::EvalReport evaluate_set(const Classifier& model, const FeatureSet& set, double threshold) {
  const Eigen::ArrayXi labels = (set.labels.array() > 0.5).cast<int>();
  return metrics::evaluate(labels, model.probabilities(set.features).array(), threshold);
}

struct Trained {
  Checkpoint checkpoint;
  TrainResult result;
};

Trained train_on(Context& ctx, const DatasetSplit& train_split, const DatasetSplit& val_split,
                 const std::string& name) {
  const auto manifest = load_manifest(ctx, enhancement_on(ctx));
  TrainConfig cfg = ctx.config.train;
  cfg.seed = ctx.flags.seed.value_or(ctx.config.default_seed);
  cfg.enhancement = ctx.config.enhancement;

  auto model = build_model(ctx.config.model_spec(), cfg.seed, ctx.config.model.weights_dir);
  const std::string checksum_before = model.backbone().checksum();
  const auto train_images = load_images(train_split, manifest);
  const auto val_images = load_images(val_split, manifest);
  const FeatureSet train_set = embed(model.backbone(), train_images);
  const FeatureSet val_set = embed(model.backbone(), val_images);

  const auto dir = ctx.layout.checkpoint(name);
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.jsonl");
  Trained t;
  t.result = train(model, train_set, val_set, cfg, &log);
  if (model.backbone().checksum() != checksum_before) throw TrainingError("backbone weights changed during training");

  std::vector<std::string> transects = train_split.transect_ids;
  transects.insert(transects.end(), val_split.transect_ids.begin(), val_split.transect_ids.end());
  std::sort(transects.begin(), transects.end());
  transects.erase(std::unique(transects.begin(), transects.end()), transects.end());
  t.checkpoint = make_checkpoint(model, cfg, train_split.name, transects, t.result.best_epoch);
  try {
    t.checkpoint.metrics_at_best = evaluate_set(model, val_set, ctx.config.threshold);
  } catch (const UndefinedMetricError& e) {
    ctx.warn(std::string("validation metrics unavailable: ") + e.what());
  }
  save_checkpoint(t.checkpoint, dir);
  ctx.produced(dir);
  ctx.out << name << ": best epoch " << t.result.best_epoch << " of " << t.result.history.size()
          << ", val loss " << t.result.best_val_loss << '\n';
  return t;
}

void cmd_train(Context& ctx) {
  const auto plan = resolve_plan(ctx, ctx.flags.plan);
  const auto exp_id = default_experiment(plan, ctx.flags.experiment);
  const auto it = std::find_if(plan.experiments.begin(), plan.experiments.end(),
                               [&](const auto& e) { return e.id == exp_id; });
  if (it == plan.experiments.end()) throw ArgumentError("plan " + plan.plan_id + " has no experiment " + exp_id);
  const auto train_split = find_split(ctx, plan.plan_id, exp_id, it->train_name);
  const auto val_split = find_split(ctx, plan.plan_id, exp_id, "validation");
  const std::string name = !ctx.flags.name.empty()
                               ? ctx.flags.name
                               : plan.plan_id + "-" + exp_id + "-" +
                                     std::string(to_string(ctx.config.model.backbone)) +
                                     (enhancement_on(ctx) ? "-enhanced" : "");
  train_on(ctx, train_split, val_split, name);
}

json eval_split(Context& ctx, const Checkpoint& ckpt, const std::string& ckpt_name, const DatasetSplit& split) {
  for (const auto& t : split.transect_ids)
    if (std::binary_search(ckpt.train_transects.begin(), ckpt.train_transects.end(), t))
      throw ValidationError("checkpoint " + ckpt_name + " was trained on transect " + t +
                            "; refusing to evaluate on " + split.name);
  if (ckpt.train_config.enhancement.enabled() != enhancement_on(ctx))
    ctx.warn("enhancement flag differs from the checkpoint's training setting");

  const auto model = restore_model(ckpt, ctx.config.model.weights_dir);
  std::vector<std::string> failures;
  const auto images = load_images(split, load_manifest(ctx, enhancement_on(ctx)), &failures);
  for (const auto& f : failures) ctx.warn("cannot decode " + f + "; excluded");
  const auto set = embed(model.backbone(), images);
  const auto report = evaluate_set(model, set, ctx.flags.threshold.value_or(ctx.config.threshold));
  json j = metrics::to_json(report);
  j["split"] = split.name;
  j["experiment"] = split.experiment_id;
  j["checkpoint"] = ckpt_name;
  j["backbone"] = std::string(to_string(ckpt.model_spec.backbone_id));
  j["enhancement"] = enhancement_on(ctx);
  j["n_failed"] = failures.size();
  return j;
}

void write_json_file(Context& ctx, const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path) << j.dump(2) << '\n';
  ctx.produced(path);
}

void cmd_eval(Context& ctx) {
  if (ctx.flags.checkpoint.empty()) throw ArgumentError("--checkpoint is required");
  if (ctx.flags.split.empty()) throw ArgumentError("--split is required");
  fs::path ckpt_dir = ctx.flags.checkpoint;
  if (!fs::exists(ckpt_dir) && fs::exists(ctx.layout.checkpoint(ctx.flags.checkpoint)))
    ckpt_dir = ctx.layout.checkpoint(ctx.flags.checkpoint);
  if (!fs::exists(ckpt_dir)) throw MissingPrerequisiteError("checkpoint " + ckpt_dir.string() + " not found; run `sgf train` first");
  const auto ckpt = load_checkpoint(ckpt_dir);
  const std::string ckpt_name = ckpt_dir.filename().string();
  const auto split = find_split(ctx, ctx.flags.plan_given ? ctx.flags.plan : std::string(), ctx.flags.experiment,
                                ctx.flags.split);
  const json report = eval_split(ctx, ckpt, ckpt_name, split);
  const fs::path out = ctx.flags.out.empty() ? ctx.layout.reports() / (ckpt_name + "__" + split.name + ".json")
                                             : fs::path(ctx.flags.out);
  write_json_file(ctx, out, report);
  ctx.out << report.dump(2) << '\n';
}

void cmd_cross_validate(Context& ctx) {
  const auto transects = split_list(ctx.flags.transects);
  const auto plan = transects.empty() ? leave_one_transect_out_plan() : leave_one_transect_out_plan(transects);
  const auto experiments = compile_and_write(ctx, plan);
  const std::string backbone(to_string(ctx.config.model.backbone));
  json folds = json::array();
  std::vector<double> acc, auc, ce;
  for (const auto& e : experiments) {
    const std::string name = "cross-val-" + e.id + "-" + backbone + (enhancement_on(ctx) ? "-enhanced" : "");
    const auto trained = train_on(ctx, e.train, e.validation, name);
    // The held-out transect is both the early-stopping and the reporting set.
    auto ckpt = trained.checkpoint;
    ckpt.train_transects = e.train.transect_ids;
    const json report = eval_split(ctx, ckpt, name, e.validation);
    write_json_file(ctx, ctx.layout.reports() / "cross-val" / (e.id + ".json"), report);
    acc.push_back(report["accuracy"]);
    auc.push_back(report["auroc"]);
    ce.push_back(report["calibration_error"]);
    folds.push_back(report);
  }
  auto stats = [](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return json{{"mean", mean}, {"std", v.size() > 1 ? std::sqrt(var / double(v.size() - 1)) : 0.0}};
  };
  const json summary{{"folds", folds},
                     {"accuracy", stats(acc)},
                     {"auroc", stats(auc)},
                     {"calibration_error", stats(ce)},
                     {"backbone", backbone},
                     {"enhancement", enhancement_on(ctx)}};
  write_json_file(ctx, ctx.flags.out.empty() ? ctx.layout.reports() / "cross-val" / "summary.json" : fs::path(ctx.flags.out),
                  summary);
  ctx.out << "cross-validation over " << folds.size() << " folds: auroc " << summary["auroc"]["mean"].get<double>()
          << ", accuracy " << summary["accuracy"]["mean"].get<double>() << '\n';
}

// ---- predict ---------------------------------------------------------------

void cmd_predict(Context& ctx) {
  if (ctx.flags.checkpoint.empty()) throw ArgumentError("--checkpoint is required");
  fs::path ckpt_dir = ctx.flags.checkpoint;
  if (!fs::exists(ckpt_dir) && fs::exists(ctx.layout.checkpoint(ctx.flags.checkpoint)))
    ckpt_dir = ctx.layout.checkpoint(ctx.flags.checkpoint);
  if (!fs::exists(ckpt_dir)) throw MissingPrerequisiteError("checkpoint " + ckpt_dir.string() + " not found; run `sgf train` first");
  const auto ckpt = load_checkpoint(ckpt_dir);
  const auto model = restore_model(ckpt, ctx.config.model.weights_dir);
  const int stride = ctx.flags.stride.value_or(ctx.config.prediction_frame_stride);
  const double threshold = ctx.flags.threshold.value_or(ctx.config.threshold);
  if (ckpt.train_config.enhancement.enabled() != enhancement_on(ctx))
    ctx.warn("enhancement flag differs from the checkpoint's training setting");
  auto enhancer = enhancement_on(ctx) ? make_enhancer(ctx.config.enhancement) : nullptr;

  for (const auto& id : selected_transects(ctx)) {
    const auto& t = ctx.config.transect(id);
    const auto& d = t.descriptor;
    require(d.video_path, "extract (configure transects[].video)");
    VideoFileSource source(d.video_path);
    const CropRect crop = crop_for(ctx.config, source.frame_size());
    std::vector<coverage::PredictionRecord> records;
    std::size_t failed = 0;
    for_each_frame(source, d, d.native_fps / double(stride), crop, [&](FrameRecord&& f) {
      try {
        const cv::Mat px = enhancer ? enhancer->apply(f.pixels) : f.pixels;
        const double p = model.probability(px);
        records.push_back({f.image_id, f.transect_id, f.frame_index, f.video_time_s, p, p >= threshold ? 1 : 0,
                           std::nullopt, std::nullopt});
      } catch (const Error& e) {
        ++failed;
        ctx.warn(f.image_id + ": " + e.what());
      }
    });
    if (const auto fixes = load_fixes(ctx, t); !fixes.empty())
      records = coverage::fuse_geo(records, fixes,
                                   {d.native_fps, ctx.config.geo_time_offset_s, ctx.config.geo_max_join_s, 0.0});
    const auto check = coverage::stride_stream(d.native_fps, stride, records);
    if (!check.gaps.empty()) ctx.warn(id + ": " + std::to_string(check.gaps.size()) + " gaps in the prediction stream");
    const auto path = ctx.flags.out.empty() ? ctx.layout.predictions(id) : fs::path(ctx.flags.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    coverage::write_predictions(path, records);
    ctx.produced(path);
    ctx.out << id << ": " << records.size() << " predictions";
    if (failed) ctx.out << ", " << failed << " failed";
    ctx.out << '\n';
  }
}

// ---- coverage / geo --------------------------------------------------------

std::vector<coverage::PredictionRecord> load_prediction_inputs(const Context& ctx) {
  std::vector<fs::path> files;
  if (!ctx.flags.input.empty()) {
    for (const auto& f : split_list(ctx.flags.input)) files.emplace_back(f);
  } else {
    const auto dir = ctx.layout.root / "predictions";
    require(dir, "predict");
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw MissingPrerequisiteError("no prediction files; run `sgf predict` first");
  std::vector<coverage::PredictionRecord> all;
  for (const auto& f : files) {
    require(f, "predict");
    auto part = coverage::read_predictions(f);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return all;
}

double native_fps_of(const ProjectConfig& c, const std::string& transect) {
  for (const auto& t : c.transects)
    if (t.descriptor.transect_id == transect) return t.descriptor.native_fps;
  return 30.0;
}

std::vector<coverage::TimedValue> read_expert_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingPrerequisiteError("expert series not found: " + path.string());
  const auto table = csv::Table::parse(in);
  const std::size_t t_col = table.column("time_s"), v_col = table.column("coverage");
  std::vector<coverage::TimedValue> out;
  for (const auto& row : table.rows()) {
    try {
      out.push_back({std::stod(row.at(t_col)), std::stod(row.at(v_col))});
    } catch (const std::exception&) {
      throw FormatError("bad expert row in " + path.string());
    }
  }
  return out;
}

void cmd_coverage(Context& ctx) {
  const auto records = load_prediction_inputs(ctx);
  const int r = ctx.flags.r.value_or(ctx.config.tm_window_r);
  const int stride = ctx.flags.stride.value_or(ctx.config.prediction_frame_stride);
  std::vector<coverage::CoverageSeries> series;
  for (const auto& group : coverage::split_by_transect(records)) {
    const std::string& id = group.front().transect_id;
    const double fps = native_fps_of(ctx.config, id);
    const auto check = coverage::stride_stream(fps, stride, group);
    for (const auto& g : check.gaps)
      ctx.warn(id + ": gap of " + std::to_string(g.spacing_s) + " s after record " + std::to_string(g.after_index));
    series.push_back(coverage::coverage_series(group, r, fps / double(stride), ctx.flags.use_probability));
  }
  const fs::path out = ctx.flags.out.empty() ? ctx.layout.coverage() / "coverage.csv" : fs::path(ctx.flags.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  coverage::write_coverage_csv(out, series);
  ctx.produced(out);
  for (const auto& s : series)
    ctx.out << s.transect_id << ": " << s.values.size() << " windows of r=" << r << " ("
            << coverage::window_seconds(r, s.samples_per_second) << " s)\n";

  if (!ctx.flags.expert.empty()) {
    if (series.size() != 1) throw ArgumentError("--expert needs predictions from exactly one transect");
    const auto expert = read_expert_csv(ctx.flags.expert);
    const auto result = coverage::compare_with_expert(series.front(), expert, ctx.flags.expert_offset_s);
    const json j{{"transect_id", series.front().transect_id},
                 {"rho", result.rho},
                 {"p_value", result.p_value},
                 {"n", result.n},
                 {"offset_s", ctx.flags.expert_offset_s}};
    write_json_file(ctx, out.parent_path() / "expert_comparison.json", j);
    ctx.out << "spearman rho " << result.rho << ", p " << result.p_value << " over " << result.n << " points\n";
  }
}

void cmd_geo(Context& ctx) {
  auto records = load_prediction_inputs(ctx);
  // Fuse any transect whose records carry no geo but has a sidecar configured.
  std::vector<coverage::PredictionRecord> fused;
  for (auto& group : coverage::split_by_transect(records)) {
    const bool has_geo = std::any_of(group.begin(), group.end(), [](const auto& r) { return r.geo.has_value(); });
    if (!has_geo) {
      for (const auto& t : ctx.config.transects)
        if (t.descriptor.transect_id == group.front().transect_id && t.sidecar)
          group = coverage::fuse_geo(group, load_fixes(ctx, t),
                                     {t.descriptor.native_fps, ctx.config.geo_time_offset_s,
                                      ctx.config.geo_max_join_s, 0.0});
    }
    fused.insert(fused.end(), group.begin(), group.end());
  }
  const double cell = ctx.flags.cell.value_or(ctx.config.heatmap_cell_m);
  const double bin = ctx.flags.bin.value_or(ctx.config.depth_bin_m);
  const auto grid = coverage::heatmap(fused, cell);
  const fs::path dir = ctx.flags.out.empty() ? ctx.layout.geo() : fs::path(ctx.flags.out);
  fs::create_directories(dir);
  coverage::write_geojson(dir / "coverage_map.geojson", coverage::to_geojson(fused, &grid));
  ctx.produced(dir / "coverage_map.geojson");
  {
    std::ofstream out(dir / "heatmap.csv", std::ios::binary);
    csv::write_row(out, {"row", "col", "lat", "lon", "presence_fraction", "n_predictions"});
    for (const auto& c : grid.cells)
      csv::write_row(out, {std::to_string(c.row), std::to_string(c.col), std::to_string(c.center.latitude),
                           std::to_string(c.center.longitude), std::to_string(c.presence_fraction),
                           std::to_string(c.n_predictions)});
    ctx.produced(dir / "heatmap.csv");
  }
  try {
    const auto profile = coverage::depth_profile(fused, bin);
    std::ofstream out(dir / "depth_profile.csv", std::ios::binary);
    csv::write_row(out, {"depth_min_m", "depth_max_m", "n_predictions", "n_present", "presence_percentage"});
    for (const auto& b : profile)
      csv::write_row(out, {std::to_string(b.lower_m), std::to_string(b.upper_m), std::to_string(b.n_predictions),
                           std::to_string(b.n_present), std::to_string(b.presence_percentage)});
    ctx.produced(dir / "depth_profile.csv");
  } catch (const EmptyInputError& e) {
    ctx.warn(std::string("depth profile skipped: ") + e.what());
  }
  ctx.out << grid.cells.size() << " heatmap cells of " << cell << " m\n";
}

// ---- annotations -----------------------------------------------------------

void cmd_annot_stats(Context& ctx) {
  std::vector<AnnotationRecord> annotations;
  if (!ctx.flags.annotations.empty()) {
    std::ifstream in(ctx.flags.annotations);
    if (!in) throw MissingPrerequisiteError("annotations file not found: " + ctx.flags.annotations);
    annotations = read_annotations_csv(in);
  } else {
    annotations = load_annotations(ctx, load_manifest(ctx, false));
  }
  const auto tags = ctx.flags.tags.empty() ? std::vector<DisagreementTag>{} : read_tags_csv(fs::path(ctx.flags.tags));
  const auto report = agreement_report(annotations, tags);
  const auto consensus = compute_consensus(annotations);
  json j = to_json(report);
  std::size_t present = 0;
  for (const auto& c : consensus) present += c.label == Label::present;
  j["n_annotations"] = annotations.size();
  j["consensus_images"] = consensus.size();
  j["consensus_present"] = present;
  const fs::path out = ctx.flags.out.empty() ? ctx.layout.stats() / "annotation_stats.json" : fs::path(ctx.flags.out);
  write_json_file(ctx, out, j);
  ctx.out << annotations.size() << " annotations by " << report.annotators.size() << " annotators, "
          << consensus.size() << " consensus images\n";
}

void cmd_serve(Context& ctx) {
  const auto manifest = load_manifest(ctx, false);
  fs::create_directories(ctx.layout.annotation_log().parent_path());
  AnnotationStore store(ImageRegistry::from_manifest(manifest),
                        {ctx.layout.annotation_log(), ctx.config.leaderboard_counts_invalid});
  api::ServiceOptions options;
  for (const auto& t : ctx.config.transects)
    options.excluded_images.insert(t.excluded_image_ids.begin(), t.excluded_image_ids.end());
  options.campaign_mode = ctx.config.campaign_mode;
  options.seed = ctx.flags.seed.value_or(ctx.config.default_seed);
  api::AnnotationService service(store, options);
  httplib::Server server;
  api::register_routes(server, service, {ctx.layout.root});
  const int port = ctx.flags.port.value_or(ctx.config.port);
  ctx.out << "serving " << service.pool_size() << " images on http://" << ctx.config.host << ":" << port << '\n'
          << std::flush;
  if (!server.listen(ctx.config.host, port)) throw IoError("cannot listen on port " + std::to_string(port));
}

// ---- run records -----------------------------------------------------------

json versions() {
  return {{"sgf", SGF_VERSION},
          {"opencv", CV_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}};
}

void write_run_record(Context& ctx, const std::string& command, const std::vector<std::string>& args,
                      Instant started, int status) {
  const auto dir = ctx.layout.runs();
  fs::create_directories(dir);
  std::string stamp = format_instant(started);
  std::replace(stamp.begin(), stamp.end(), ':', '-');
  const json record{{"command", command},
                    {"args", args},
                    {"config_hash", config_hash(ctx.config)},
                    {"config", to_json(ctx.config)},
                    {"seed", ctx.flags.seed.value_or(ctx.config.default_seed)},
                    {"versions", versions()},
                    {"started_at", format_instant(started)},
                    {"finished_at", format_instant(now_utc())},
                    {"exit_code", status},
                    {"artifacts", ctx.artifacts}};
  std::ofstream(dir / (stamp + "-" + command + ".json")) << record.dump(2) << '\n';
}

void apply_overrides(ProjectConfig& c, const Flags& f) {
  if (f.seed) c.default_seed = *f.seed;
  if (f.threshold) c.threshold = *f.threshold;
  if (f.r) c.tm_window_r = *f.r;
  if (f.stride) c.prediction_frame_stride = *f.stride;
  if (f.enhance) {
    if (*f.enhance) {
      c.enhancement.kind = EnhancerKind::external_model;
    } else {
      c.enhancement.kind = EnhancerKind::identity;
    }
  }
  c.train.seed = c.default_seed;
  c.train.enhancement = c.enhancement;
  c.validate();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Seagrass video survey toolkit", "sgf"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  bool enhance_flag = false;
  app.add_option("--config", f.config, "YAML project configuration");
  app.add_option("--seed", f.seed, "random seed");
  auto* enhance_opt = app.add_flag("--enhance,!--no-enhance", enhance_flag, "toggle image enhancement");
  app.add_option("--threshold", f.threshold, "binarization threshold in (0, 1)");
  app.add_option("--r", f.r, "temporal mean window in samples");
  app.add_option("--stride", f.stride, "prediction frame stride");
  app.add_option("--out", f.out, "output path");

  using Handler = void (*)(Context&);
  std::map<CLI::App*, std::pair<std::string, Handler>> handlers;
  auto add = [&](const char* name, const char* help, Handler h) {
    auto* sub = app.add_subcommand(name, help);
    handlers[sub] = {name, h};
    return sub;
  };

  auto* extract = add("extract", "decode, crop and sample transect videos", cmd_extract);
  extract->add_option("--transects", f.transects, "comma-separated transect ids");
  extract->add_option("--fps", f.fps, "extraction rate in frames per second");

  add("enhance", "apply the configured enhancer to extracted frames", cmd_enhance);

  auto* split = add("split", "compile dataset splits from consensus labels", cmd_split);
  auto* plan_opt = split->add_option("--plan", f.plan, "initial, final, cross-val or a plan JSON file");
  split->add_option("--transects", f.transects, "transects for cross-val");
  split->add_option("--annotations", f.annotations, "annotations CSV instead of the event log");

  auto* train_cmd = add("train", "train a classifier head on a split", cmd_train);
  train_cmd->add_option("--plan", f.plan, "plan id");
  train_cmd->add_option("--experiment", f.experiment, "experiment id within the plan");
  train_cmd->add_option("--name", f.name, "checkpoint name");
  train_cmd->add_option("--transects", f.transects, "transects for cross-val plans");

  auto* eval = add("eval", "evaluate a checkpoint on a split", cmd_eval);
  auto* eval_plan = eval->add_option("--plan", f.plan, "plan id");
  eval->add_option("--experiment", f.experiment, "experiment id");
  eval->add_option("--split", f.split, "split name, e.g. final_test")->required();
  eval->add_option("--checkpoint", f.checkpoint, "checkpoint directory or name")->required();

  auto* cv = add("cross-validate", "leave-one-transect-out cross validation", cmd_cross_validate);
  cv->add_option("--transects", f.transects, "comma-separated transects, one fold each");
  cv->add_option("--annotations", f.annotations, "annotations CSV instead of the event log");

  auto* predict = add("predict", "run a checkpoint over transect videos", cmd_predict);
  predict->add_option("--checkpoint", f.checkpoint, "checkpoint directory or name")->required();
  predict->add_option("--transect", f.transect, "single transect id");
  predict->add_option("--transects", f.transects, "comma-separated transect ids");

  auto* cov = add("coverage", "temporal-mean coverage from predictions", cmd_coverage);
  cov->add_option("--input", f.input, "prediction JSONL file(s), comma-separated");
  cov->add_flag("--probability", f.use_probability, "average probabilities instead of binary predictions");
  cov->add_option("--expert", f.expert, "expert coverage CSV (time_s,coverage) for a Spearman test");
  cov->add_option("--expert-offset", f.expert_offset_s, "seconds added to expert times");

  auto* geo = add("geo", "heatmap, GeoJSON and depth profile", cmd_geo);
  geo->add_option("--input", f.input, "prediction JSONL file(s), comma-separated");
  geo->add_option("--cell", f.cell, "heatmap cell size in metres");
  geo->add_option("--bin", f.bin, "depth bin width in metres");

  auto* stats = add("annot-stats", "annotator agreement analysis", cmd_annot_stats);
  stats->add_option("--annotations", f.annotations, "annotations CSV instead of the event log");
  stats->add_option("--tags", f.tags, "disagreement tags CSV (image_id,kind)");

  auto* serve = add("serve", "start the annotation service", cmd_serve);
  serve->add_option("--port", f.port, "TCP port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (enhance_opt->count() > 0) f.enhance = enhance_flag;
  f.plan_given = plan_opt->count() > 0 || eval_plan->count() > 0;

  CLI::App* sub = app.get_subcommands().front();
  const auto& [name, handler] = handlers.at(sub);
  std::vector<std::string> args(argv + 1, argv + argc);

  std::optional<Context> ctx;
  const Instant started = now_utc();
  int status = 0;
  try {
    auto config = load_config(f.config.empty() ? std::nullopt : std::optional<fs::path>(f.config));
    apply_overrides(config, f);
    ctx.emplace(Context{config, Layout{fs::absolute(config.data_root)}, f, out, err, {}});
    handler(*ctx);
  } catch (const std::exception& e) {
    status = exit_code_for(e);
    err << "error: " << e.what() << '\n';
  }
  if (ctx && name != "serve") {
    try {
      write_run_record(*ctx, name, args, started, status);
    } catch (const std::exception& e) {
      err << "warning: run record not written: " << e.what() << '\n';
    }
  }
  return status;
}

}  // namespace sgf::cli
