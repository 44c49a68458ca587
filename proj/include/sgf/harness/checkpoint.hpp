#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgf/common/time.hpp"
#include "sgf/harness/model.hpp"
#include "sgf/metrics/metrics.hpp"

namespace sgf {

struct Checkpoint {
  ModelSpec model_spec;
  int feature_dim = 0;
  Eigen::VectorXd head_weights;
  TrainConfig train_config;
  std::string train_split_name;
  std::vector<std::string> train_transects;  // checked by eval for leakage
  std::string backbone_checksum;
  int best_epoch = 0;
  std::optional<metrics::EvalReport> metrics_at_best;
  Instant created_at{};
};

Checkpoint make_checkpoint(const Classifier& model, const TrainConfig& config,
                           std::string train_split_name, std::vector<std::string> train_transects,
                           int best_epoch = 0);

// Directory with spec.json, train_config.json, head_weights.bin, metrics.json.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
// Throws MissingPrerequisiteError when the directory or a file is absent and
// FormatError for a corrupt or version-mismatched weights file.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Rebuilds the classifier; throws LoadError when the backbone weights differ
// from the ones the checkpoint was trained on.
Classifier restore_model(const Checkpoint& ckpt,
                         const std::filesystem::path& weights_dir = default_weights_dir());

// head_weights.bin layout: "SGFHEAD\0", u32 version, i32 in, l1, l2,
// u64 count, count little-endian IEEE doubles.
inline constexpr std::uint32_t kHeadWeightsVersion = 1;
void write_head_weights(const std::filesystem::path& path, int in, int l1, int l2,
                        const Eigen::VectorXd& params);
Eigen::VectorXd read_head_weights(const std::filesystem::path& path, int& in, int& l1, int& l2);

struct PredictItem {
  std::string image_id;
  std::optional<double> probability;  // unset when the item failed
  std::string error;
};

struct PredictResult {
  std::vector<PredictItem> items;
  std::vector<std::string> warnings;
};

struct PredictInput {
  std::string image_id;
  cv::Mat pixels;                              // used when non-empty
  std::optional<std::filesystem::path> path;   // decoded otherwise
};

// Per-item failures (decode errors, wrong pixel format) are reported in the
// item and the batch continues. A mismatch between `enhancement` and the
// checkpoint's training enhancement adds a warning and proceeds.
PredictResult predict(const Classifier& model, const TrainConfig& trained_with,
                      std::span<const PredictInput> inputs, const EnhancerSpec& enhancement);
PredictResult predict(const Classifier& model, const TrainConfig& trained_with,
                      std::span<const FrameRecord> frames, const EnhancerSpec& enhancement);

}  // namespace sgf
