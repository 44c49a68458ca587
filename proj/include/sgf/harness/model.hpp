#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <opencv2/core.hpp>

#include "sgf/harness/backbone.hpp"
#include "sgf/harness/head.hpp"
#include "sgf/harness/model_spec.hpp"
#include "sgf/ingest/types.hpp"

namespace sgf {

using Head = MlpHead<double>;

// Frozen backbone plus trainable head.
class Classifier {
 public:
  Classifier(ModelSpec spec, std::shared_ptr<const Backbone> backbone, Head head);

  const ModelSpec& spec() const noexcept { return spec_; }
  const Backbone& backbone() const noexcept { return *backbone_; }
  Head& head() noexcept { return head_; }
  const Head& head() const noexcept { return head_; }

  std::size_t trainable_parameters() const { return static_cast<std::size_t>(head_.parameter_count()); }
  std::size_t frozen_parameters() const { return backbone_->parameter_count(); }

  // Probability of "present" for each column of a feature matrix.
  Eigen::VectorXd probabilities(const Eigen::MatrixXd& features) const;
  double probability(const cv::Mat& bgr) const;

 private:
  ModelSpec spec_;
  std::shared_ptr<const Backbone> backbone_;
  Head head_;
};

// Throws ArgumentError for an invalid spec and LoadError when the backbone
// weights are unavailable. The head is initialized from `seed`.
Classifier build_model(const ModelSpec& spec, std::uint64_t seed,
                       const std::filesystem::path& weights_dir = default_weights_dir());

// Backbone features for labelled images; columns follow `labels`.
struct FeatureSet {
  Eigen::MatrixXd features;  // feature_dim x n
  Eigen::VectorXd labels;    // 0/1
  std::vector<std::string> image_ids;

  Eigen::Index size() const noexcept { return labels.size(); }
};

struct LabelledImage {
  std::string image_id;
  cv::Mat pixels;
  int label = 0;
};

// Images are enhanced with `enhancer` when given, then embedded.
FeatureSet embed(const Backbone& backbone, std::span<const LabelledImage> images,
                 ImageEnhancer* enhancer = nullptr);

// 1 iff probability >= threshold. Throws ArgumentError unless 0 < threshold < 1.
std::vector<int> binarize(std::span<const double> probabilities, double threshold = 0.5);

}  // namespace sgf
