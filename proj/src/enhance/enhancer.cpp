#include "sgf/enhance/enhancer.hpp"

#include <atomic>
#include <fstream>
#include <unistd.h>

#include <opencv2/dnn.hpp>
#include <opencv2/imgcodecs.hpp>

#include "sgf/common/digest.hpp"
#include "sgf/common/error.hpp"

namespace sgf {

std::string_view to_string(EnhancerKind k) {
  return k == EnhancerKind::identity ? "identity" : "external_model";
}

EnhancerKind parse_enhancer_kind(std::string_view text) {
  if (text == "identity" || text == "none") return EnhancerKind::identity;
  if (text == "external_model") return EnhancerKind::external_model;
  throw ValidationError("unknown enhancer kind '" + std::string(text) + "'");
}

void EnhancerSpec::validate() const {
  if (kind == EnhancerKind::external_model && (!model_path || model_path->empty()))
    throw ValidationError("external_model enhancer requires model_path");
}

struct OnnxEnhancer::Impl {
  cv::dnn::Net net;
};

OnnxEnhancer::OnnxEnhancer(const std::filesystem::path& model_path) : impl_(std::make_unique<Impl>()) {
  if (!std::filesystem::is_regular_file(model_path))
    throw LoadError("enhancement model not found: " + model_path.string());
  try {
    impl_->net = cv::dnn::readNetFromONNX(model_path.string());
  } catch (const cv::Exception& ex) {
    throw LoadError("cannot load enhancement model " + model_path.string() + ": " + ex.what());
  }
  if (impl_->net.empty()) throw LoadError("empty enhancement model: " + model_path.string());
  fingerprint_ = sha256_file(model_path).substr(0, 16);
}

OnnxEnhancer::~OnnxEnhancer() = default;

cv::Mat OnnxEnhancer::apply(const cv::Mat& bgr) {
  const cv::Mat blob = cv::dnn::blobFromImage(bgr, 1.0 / 255.0, bgr.size(), cv::Scalar(), true, false,
                                              CV_32F);
  cv::Mat out;
  try {
    impl_->net.setInput(blob);
    out = impl_->net.forward();
  } catch (const cv::Exception& ex) {
    throw AdapterError(std::string("enhancement model failed: ") + ex.what());
  }
  if (out.dims != 4 || out.size[0] != 1 || out.size[1] != 3 || out.size[2] != bgr.rows ||
      out.size[3] != bgr.cols)
    throw AdapterError("enhancement model output shape does not match its input");

  std::vector<cv::Mat> planes;
  const int hw[] = {bgr.rows, bgr.cols};
  // NCHW RGB -> BGR planes
  for (int c = 2; c >= 0; --c)
    planes.emplace_back(2, hw, CV_32F, out.ptr<float>(0, c));
  cv::Mat merged, result;
  cv::merge(planes, merged);
  merged.convertTo(result, CV_8UC3, 255.0);  // saturating cast clips to [0, 255]
  return result;
}

std::unique_ptr<ImageEnhancer> make_enhancer(const EnhancerSpec& spec) {
  spec.validate();
  if (!spec.enabled()) return std::make_unique<IdentityEnhancer>();
  return std::make_unique<OnnxEnhancer>(*spec.model_path);
}

FrameRecord enhance(const FrameRecord& frame, ImageEnhancer& enhancer) {
  if (!has_standard_shape(frame.pixels))
    throw ArgumentError("enhance: frame " + frame.image_id + " is not a 1280x500 BGR image");
  FrameRecord out = frame;
  out.pixels = enhancer.apply(frame.pixels);
  if (out.pixels.size() != frame.pixels.size() || out.pixels.type() != frame.pixels.type())
    throw AdapterError("enhancer changed the shape of " + frame.image_id);
  return out;
}

FrameRecord enhance(const FrameRecord& frame, const EnhancerSpec& spec) {
  auto enhancer = make_enhancer(spec);
  return enhance(frame, *enhancer);
}

std::vector<FrameRecord> enhance_batch(const std::vector<FrameRecord>& frames,
                                       ImageEnhancer& enhancer) {
  std::vector<FrameRecord> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(enhance(f, enhancer));
  return out;
}

EnhancementCache::EnhancementCache(std::filesystem::path root, ImageEnhancer& enhancer,
                                   std::string ext)
    : dir_(std::move(root) / enhancer.fingerprint()), enhancer_(enhancer), ext_(std::move(ext)) {}

std::filesystem::path EnhancementCache::entry_path(const std::string& image_id) const {
  return dir_ / (image_id + "." + ext_);
}

bool EnhancementCache::contains(const std::string& image_id) const {
  return std::filesystem::exists(entry_path(image_id));
}

cv::Mat EnhancementCache::get_or_compute(const std::string& image_id, const cv::Mat& bgr) {
  const auto path = entry_path(image_id);
  if (std::filesystem::exists(path)) {
    cv::Mat cached = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (!cached.empty() && cached.size() == bgr.size()) {
      ++hits_;
      return cached;
    }
  }
  ++misses_;
  cv::Mat result = enhancer_.apply(bgr);
  if (result.size() != bgr.size() || result.type() != bgr.type())
    throw AdapterError("enhancer changed the shape of " + image_id);

  std::filesystem::create_directories(dir_);
  static std::atomic<unsigned> counter{0};
  const auto tmp = dir_ / (".tmp-" + std::to_string(::getpid()) + "-" +
                           std::to_string(counter++) + "-" + image_id + "." + ext_);
  if (!cv::imwrite(tmp.string(), result)) throw IoError("cannot write cache entry " + tmp.string());
  std::filesystem::rename(tmp, path);
  return result;
}

void require_matching_enhancement(bool train_enhanced, bool test_enhanced) {
  if (train_enhanced != test_enhanced)
    throw ConfigError(std::string("enhancement mismatch: model trained ") +
                      (train_enhanced ? "with" : "without") + " enhancement, evaluated " +
                      (test_enhanced ? "with" : "without"));
}

}  // namespace sgf
