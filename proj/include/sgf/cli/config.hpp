#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sgf/enhance/enhancer.hpp"
#include "sgf/harness/model_spec.hpp"
#include "sgf/ingest/frames.hpp"
#include "sgf/ingest/types.hpp"

namespace sgf::cli {

struct TransectConfig {
  TransectDescriptor descriptor;
  std::optional<std::filesystem::path> sidecar;   // frame-indexed geo fixes
  std::optional<std::size_t> sample_count;        // uniform subsample of extracted frames
  std::vector<std::string> excluded_image_ids;    // e.g. frames above the surface
};

struct ModelConfig {
  BackboneId backbone = BackboneId::resnet18;
  std::optional<int> head_layer1;
  std::optional<int> head_layer2;
  std::filesystem::path weights_dir = "weights";
  std::optional<std::filesystem::path> weights_path;
};

struct ProjectConfig {
  std::filesystem::path data_root = "data";
  std::vector<TransectConfig> transects;
  std::uint64_t default_seed = 0;
  EnhancerSpec enhancement;
  TrainConfig train;
  ModelConfig model;
  double threshold = 0.5;
  int tm_window_r = 30;
  int prediction_frame_stride = 10;
  double extract_fps = 5.0;
  std::optional<CropRect> crop;  // centred in the source frame when unset
  double geo_time_offset_s = 0.0;
  double geo_max_join_s = 5.0;
  double heatmap_cell_m = 20.0;
  double depth_bin_m = 1.0;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool campaign_mode = false;
  bool leaderboard_counts_invalid = false;

  // Throws ValidationError.
  void validate() const;
  ModelSpec model_spec() const;
  // Throws ArgumentError for an unknown transect.
  const TransectConfig& transect(const std::string& id) const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;

std::optional<std::string> process_env(const std::string& name);

// YAML document; relative paths resolve against the file's directory.
// SGF_* environment variables override file values (SGF_DATA_ROOT,
// SGF_DEFAULT_SEED, SGF_THRESHOLD, SGF_TM_WINDOW_R,
// SGF_PREDICTION_FRAME_STRIDE, SGF_EXTRACT_FPS, SGF_ENHANCEMENT,
// SGF_ENHANCER_MODEL, SGF_BACKBONE, SGF_WEIGHTS_DIR, SGF_LEARNING_RATE,
// SGF_MAX_EPOCHS, SGF_BATCH_SIZE, SGF_EARLY_STOP_PATIENCE, SGF_PORT).
// Without a file the defaults apply. Throws ConfigError / ValidationError.
ProjectConfig load_config(const std::optional<std::filesystem::path>& path,
                          const EnvLookup& env = process_env);
ProjectConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir,
                           const EnvLookup& env = process_env);

nlohmann::json to_json(const ProjectConfig& c);
// SHA-256 of the canonical JSON form.
std::string config_hash(const ProjectConfig& c);

}  // namespace sgf::cli
