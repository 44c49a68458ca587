#include "sgf/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "sgf/common/digest.hpp"
#include "sgf/common/error.hpp"

namespace sgf::cli {
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? (base / path).lexically_normal() : path;
}

template <typename T>
T scalar(const YAML::Node& node, const char* key, T fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
T env_value(const std::string& name, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) throw ConfigError(name + ": cannot parse '" + text + "'");
  return v;
}

EnhancerSpec enhancer_from_yaml(const YAML::Node& n, const fs::path& base) {
  EnhancerSpec s;
  if (!n) return s;
  if (n.IsScalar()) {
    s.kind = parse_enhancer_kind(n.as<std::string>());
    return s;
  }
  s.kind = parse_enhancer_kind(scalar<std::string>(n, "kind", "identity"));
  if (n["model_path"]) s.model_path = resolve(base, n["model_path"].as<std::string>());
  s.expected_latency_s_per_image = scalar<double>(n, "expected_latency_s_per_image", 0.0);
  return s;
}

TransectConfig transect_from_yaml(const YAML::Node& n, const fs::path& base) {
  TransectConfig t;
  auto& d = t.descriptor;
  d.transect_id = scalar<std::string>(n, "id", "");
  if (d.transect_id.empty()) throw ConfigError("transect entry without id");
  if (n["video"]) d.video_path = resolve(base, n["video"].as<std::string>());
  d.native_fps = scalar<double>(n, "native_fps", 30.0);
  if (n["recorded_on"]) {
    const auto text = n["recorded_on"].as<std::string>();
    const auto date = parse_date(text);
    if (!date) throw ConfigError("transect " + d.transect_id + ": bad recorded_on '" + text + "'");
    d.recorded_on = *date;
  }
  d.length_km = scalar<double>(n, "length_km", 0.0);
  d.depth_range_m = {scalar<double>(n, "depth_min_m", 0.0), scalar<double>(n, "depth_max_m", 0.0)};
  if (n["sidecar"]) t.sidecar = resolve(base, n["sidecar"].as<std::string>());
  if (n["sample_count"]) t.sample_count = n["sample_count"].as<std::size_t>();
  if (n["excluded_image_ids"])
    for (const auto& id : n["excluded_image_ids"]) t.excluded_image_ids.push_back(id.as<std::string>());
  return t;
}

void apply_env(ProjectConfig& c, const EnvLookup& env) {
  auto get = [&](const char* name) { return env(name); };
  if (auto v = get("SGF_DATA_ROOT")) c.data_root = *v;
  if (auto v = get("SGF_DEFAULT_SEED")) c.default_seed = env_value<std::uint64_t>("SGF_DEFAULT_SEED", *v);
  if (auto v = get("SGF_THRESHOLD")) c.threshold = env_value<double>("SGF_THRESHOLD", *v);
  if (auto v = get("SGF_TM_WINDOW_R")) c.tm_window_r = env_value<int>("SGF_TM_WINDOW_R", *v);
  if (auto v = get("SGF_PREDICTION_FRAME_STRIDE"))
    c.prediction_frame_stride = env_value<int>("SGF_PREDICTION_FRAME_STRIDE", *v);
  if (auto v = get("SGF_EXTRACT_FPS")) c.extract_fps = env_value<double>("SGF_EXTRACT_FPS", *v);
  if (auto v = get("SGF_ENHANCEMENT")) c.enhancement.kind = parse_enhancer_kind(*v);
  if (auto v = get("SGF_ENHANCER_MODEL")) c.enhancement.model_path = *v;
  if (auto v = get("SGF_BACKBONE")) c.model.backbone = parse_backbone_id(*v);
  if (auto v = get("SGF_WEIGHTS_DIR")) c.model.weights_dir = *v;
  if (auto v = get("SGF_LEARNING_RATE")) c.train.learning_rate = env_value<double>("SGF_LEARNING_RATE", *v);
  if (auto v = get("SGF_MAX_EPOCHS")) c.train.max_epochs = env_value<int>("SGF_MAX_EPOCHS", *v);
  if (auto v = get("SGF_BATCH_SIZE")) c.train.batch_size = env_value<int>("SGF_BATCH_SIZE", *v);
  if (auto v = get("SGF_EARLY_STOP_PATIENCE"))
    c.train.early_stop_patience = env_value<int>("SGF_EARLY_STOP_PATIENCE", *v);
  if (auto v = get("SGF_PORT")) c.port = env_value<int>("SGF_PORT", *v);
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
  return std::nullopt;
}

void ProjectConfig::validate() const {
  if (data_root.empty()) throw ValidationError("data_root must be set");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
  if (tm_window_r < 1) throw ValidationError("tm_window_r must be >= 1");
  if (prediction_frame_stride < 1) throw ValidationError("prediction_frame_stride must be >= 1");
  if (!(extract_fps > 0.0)) throw ValidationError("extract_fps must be positive");
  if (!(heatmap_cell_m > 0.0)) throw ValidationError("heatmap_cell_m must be positive");
  if (!(depth_bin_m > 0.0)) throw ValidationError("depth_bin_m must be positive");
  if (!(geo_max_join_s >= 0.0)) throw ValidationError("geo_max_join_s must be >= 0");
  if (port < 0 || port > 65535) throw ValidationError("port out of range");
  std::vector<std::string> seen;
  for (const auto& t : transects) {
    t.descriptor.validate();
    for (const auto& s : seen)
      if (s == t.descriptor.transect_id)
        throw ValidationError("duplicate transect id " + s);
    seen.push_back(t.descriptor.transect_id);
  }
  enhancement.validate();
  try {
    train.validate();
  } catch (const ConfigError& e) {
    throw ValidationError(e.what());
  }
  model_spec().validate();
}

ModelSpec ProjectConfig::model_spec() const {
  ModelSpec s = default_model_spec(model.backbone);
  if (model.head_layer1) s.head_layer1 = *model.head_layer1;
  if (model.head_layer2) s.head_layer2 = *model.head_layer2;
  s.weights_path = model.weights_path;
  return s;
}

const TransectConfig& ProjectConfig::transect(const std::string& id) const {
  for (const auto& t : transects)
    if (t.descriptor.transect_id == id) return t;
  throw ArgumentError("transect " + id + " is not configured");
}

ProjectConfig parse_config(const std::string& yaml_text, const fs::path& base, const EnvLookup& env) {
  ProjectConfig c;
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (root && !root.IsNull()) {
    if (!root.IsMap()) throw ConfigError("config must be a mapping");
    try {
      if (root["data_root"]) c.data_root = resolve(base, root["data_root"].as<std::string>());
      c.default_seed = scalar<std::uint64_t>(root, "default_seed", c.default_seed);
      c.threshold = scalar<double>(root, "threshold", c.threshold);
      c.tm_window_r = scalar<int>(root, "tm_window_r", c.tm_window_r);
      c.prediction_frame_stride = scalar<int>(root, "prediction_frame_stride", c.prediction_frame_stride);
      c.extract_fps = scalar<double>(root, "extract_fps", c.extract_fps);
      c.geo_time_offset_s = scalar<double>(root, "geo_time_offset_s", c.geo_time_offset_s);
      c.geo_max_join_s = scalar<double>(root, "geo_max_join_s", c.geo_max_join_s);
      c.heatmap_cell_m = scalar<double>(root, "heatmap_cell_m", c.heatmap_cell_m);
      c.depth_bin_m = scalar<double>(root, "depth_bin_m", c.depth_bin_m);
      c.host = scalar<std::string>(root, "host", c.host);
      c.port = scalar<int>(root, "port", c.port);
      c.campaign_mode = scalar<bool>(root, "campaign_mode", c.campaign_mode);
      c.leaderboard_counts_invalid = scalar<bool>(root, "leaderboard_counts_invalid", c.leaderboard_counts_invalid);
      c.enhancement = enhancer_from_yaml(root["enhancement"], base);
      if (const auto crop = root["crop"]) {
        CropRect r;
        r.x = scalar<int>(crop, "x", 0);
        r.y = scalar<int>(crop, "y", 0);
        r.width = scalar<int>(crop, "width", kFrameWidth);
        r.height = scalar<int>(crop, "height", kFrameHeight);
        c.crop = r;
      }
      if (const auto m = root["model"]) {
        c.model.backbone = parse_backbone_id(scalar<std::string>(m, "backbone", "resnet18"));
        if (m["head_layer1"]) c.model.head_layer1 = m["head_layer1"].as<int>();
        if (m["head_layer2"]) c.model.head_layer2 = m["head_layer2"].as<int>();
        if (m["weights_dir"]) c.model.weights_dir = resolve(base, m["weights_dir"].as<std::string>());
        if (m["weights_path"]) c.model.weights_path = resolve(base, m["weights_path"].as<std::string>());
      }
      if (const auto t = root["train"]) {
        c.train.learning_rate = scalar<double>(t, "learning_rate", c.train.learning_rate);
        c.train.max_epochs = scalar<int>(t, "max_epochs", c.train.max_epochs);
        c.train.batch_size = scalar<int>(t, "batch_size", c.train.batch_size);
        c.train.early_stop_patience = scalar<int>(t, "early_stop_patience", c.train.early_stop_patience);
      }
      if (const auto ts = root["transects"]) {
        if (!ts.IsSequence()) throw ConfigError("transects must be a list");
        for (const auto& t : ts) c.transects.push_back(transect_from_yaml(t, base));
      }
    } catch (const YAML::Exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (!root["data_root"]) c.data_root = resolve(base, "data");
  if (!root["model"] || !root["model"]["weights_dir"]) c.model.weights_dir = resolve(base, "weights");
  apply_env(c, env);
  c.train.seed = c.default_seed;
  c.train.enhancement = c.enhancement;
  c.validate();
  return c;
}

ProjectConfig load_config(const std::optional<fs::path>& path, const EnvLookup& env) {
  if (!path) return parse_config("", fs::current_path(), env);
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot read config " + path->string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), fs::absolute(*path).parent_path(), env);
}

nlohmann::json to_json(const ProjectConfig& c) {
  nlohmann::json transects = nlohmann::json::array();
  for (const auto& t : c.transects) {
    const auto& d = t.descriptor;
    transects.push_back({{"id", d.transect_id},
                         {"video", d.video_path.string()},
                         {"native_fps", d.native_fps},
                         {"recorded_on", format_date(d.recorded_on)},
                         {"length_km", d.length_km},
                         {"depth_min_m", d.depth_range_m.min_m},
                         {"depth_max_m", d.depth_range_m.max_m},
                         {"sidecar", t.sidecar ? t.sidecar->string() : ""},
                         {"sample_count", t.sample_count ? nlohmann::json(*t.sample_count) : nlohmann::json(nullptr)},
                         {"excluded_image_ids", t.excluded_image_ids}});
  }
  nlohmann::json crop = nullptr;
  if (c.crop) crop = {{"x", c.crop->x}, {"y", c.crop->y}, {"width", c.crop->width}, {"height", c.crop->height}};
  return {{"data_root", c.data_root.string()},
          {"default_seed", c.default_seed},
          {"threshold", c.threshold},
          {"tm_window_r", c.tm_window_r},
          {"prediction_frame_stride", c.prediction_frame_stride},
          {"extract_fps", c.extract_fps},
          {"crop", crop},
          {"geo_time_offset_s", c.geo_time_offset_s},
          {"geo_max_join_s", c.geo_max_join_s},
          {"heatmap_cell_m", c.heatmap_cell_m},
          {"depth_bin_m", c.depth_bin_m},
          {"host", c.host},
          {"port", c.port},
          {"campaign_mode", c.campaign_mode},
          {"leaderboard_counts_invalid", c.leaderboard_counts_invalid},
          {"enhancement", to_json(c.enhancement)},
          {"model", to_json(c.model_spec())},
          {"weights_dir", c.model.weights_dir.string()},
          {"train", to_json(c.train)},
          {"transects", transects}};
}

std::string config_hash(const ProjectConfig& c) { return sha256_hex(to_json(c).dump()); }

}  // namespace sgf::cli
