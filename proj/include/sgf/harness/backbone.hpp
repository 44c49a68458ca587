#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <opencv2/core.hpp>

#include "sgf/harness/model_spec.hpp"

namespace sgf {

// Frozen feature extractor. Implementations expose no way to modify their
// weights; checksum() hashes them so callers can prove it.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual int feature_dim() const = 0;
  virtual int input_size() const = 0;
  virtual std::size_t parameter_count() const = 0;
  virtual std::string checksum() const = 0;
  // BGR 8-bit image of any size -> pooled feature vector.
  virtual Eigen::VectorXd features(const cv::Mat& bgr) const = 0;
};

// Anisotropic resize to side x side, RGB, scaled to [0, 1] and normalized
// with ImageNet channel statistics. Returns a 1x3xHxW float blob.
cv::Mat imagenet_blob(const cv::Mat& bgr, int side);

// Network loaded from an ONNX file. Throws LoadError.
class OnnxBackbone final : public Backbone {
 public:
  OnnxBackbone(const std::filesystem::path& path, int input_size);
  ~OnnxBackbone() override;

  int feature_dim() const override { return feature_dim_; }
  int input_size() const override { return input_size_; }
  std::size_t parameter_count() const override { return parameter_count_; }
  std::string checksum() const override;
  Eigen::VectorXd features(const cv::Mat& bgr) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int input_size_;
  int feature_dim_ = 0;
  std::size_t parameter_count_ = 0;
};

// Fixed bank of seeded random 5x5 colour filters followed by ReLU and
// mean/std pooling per filter. Deterministic for a given seed.
class TextureBankBackbone final : public Backbone {
 public:
  static constexpr int kFilters = 16;
  static constexpr int kKernel = 5;

  explicit TextureBankBackbone(int input_size = 64, std::uint64_t seed = 0x5eedba5eULL);

  int feature_dim() const override { return 2 * kFilters; }
  int input_size() const override { return input_size_; }
  std::size_t parameter_count() const override { return weights_.size(); }
  std::string checksum() const override;
  Eigen::VectorXd features(const cv::Mat& bgr) const override;

 private:
  int input_size_;
  std::vector<float> weights_;  // [filter][channel][ky][kx] then one bias per filter
};

// Throws LoadError when the weights file is missing or its feature width
// differs from the catalog entry.
std::shared_ptr<Backbone> load_backbone(const ModelSpec& spec,
                                        const std::filesystem::path& weights_dir);

// $SGF_WEIGHTS_DIR or ./weights
std::filesystem::path default_weights_dir();

}  // namespace sgf
