#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "sgf/ingest/types.hpp"

namespace sgf {

enum class EnhancerKind { identity, external_model };

std::string_view to_string(EnhancerKind k);
EnhancerKind parse_enhancer_kind(std::string_view text);

struct EnhancerSpec {
  EnhancerKind kind = EnhancerKind::identity;
  std::optional<std::filesystem::path> model_path;
  double expected_latency_s_per_image = 0.0;  // informational

  bool enabled() const noexcept { return kind != EnhancerKind::identity; }
  // external_model requires model_path; throws ValidationError.
  void validate() const;
};

// Image-to-image transform. Output has the input's size and type.
class ImageEnhancer {
 public:
  virtual ~ImageEnhancer() = default;
  virtual cv::Mat apply(const cv::Mat& bgr) = 0;
  // Stable identifier of the transform, used as the cache key.
  virtual std::string fingerprint() const = 0;
};

class IdentityEnhancer final : public ImageEnhancer {
 public:
  cv::Mat apply(const cv::Mat& bgr) override { return bgr.clone(); }
  std::string fingerprint() const override { return "identity"; }
};

// Pre-trained enhancement network exported to ONNX. Input is RGB in [0, 1],
// NCHW at the frame's resolution; output has the same layout. Throws
// LoadError when the file is missing or unreadable, AdapterError when the
// output shape differs from the input.
class OnnxEnhancer final : public ImageEnhancer {
 public:
  explicit OnnxEnhancer(const std::filesystem::path& model_path);
  ~OnnxEnhancer() override;
  cv::Mat apply(const cv::Mat& bgr) override;
  std::string fingerprint() const override { return fingerprint_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string fingerprint_;
};

std::unique_ptr<ImageEnhancer> make_enhancer(const EnhancerSpec& spec);

// Keeps identity fields; throws AdapterError if the enhancer changes the shape.
FrameRecord enhance(const FrameRecord& frame, ImageEnhancer& enhancer);
FrameRecord enhance(const FrameRecord& frame, const EnhancerSpec& spec);
std::vector<FrameRecord> enhance_batch(const std::vector<FrameRecord>& frames,
                                       ImageEnhancer& enhancer);

// Disk cache <root>/<fingerprint>/<image_id>.<ext>, written via a temporary
// file and rename so readers never see partial images.
class EnhancementCache {
 public:
  EnhancementCache(std::filesystem::path root, ImageEnhancer& enhancer, std::string ext = "png");

  std::filesystem::path entry_path(const std::string& image_id) const;
  bool contains(const std::string& image_id) const;
  cv::Mat get_or_compute(const std::string& image_id, const cv::Mat& bgr);

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  std::filesystem::path dir_;
  ImageEnhancer& enhancer_;
  std::string ext_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Train and test images of one experiment must share the enhancement flag.
// Throws ConfigError otherwise.
void require_matching_enhancement(bool train_enhanced, bool test_enhanced);

}  // namespace sgf
