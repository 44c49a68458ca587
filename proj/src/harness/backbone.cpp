#include "sgf/harness/backbone.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <string_view>

#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include "sgf/common/digest.hpp"
#include "sgf/common/error.hpp"

namespace sgf {

cv::Mat imagenet_blob(const cv::Mat& bgr, int side) {
  if (bgr.empty() || bgr.type() != CV_8UC3) throw DecodeError("expected a BGR 8-bit image");
  cv::Mat resized, rgb, f;
  cv::resize(bgr, resized, cv::Size(side, side), 0, 0, cv::INTER_LINEAR);
  cv::cvtColor(resized, rgb, cv::COLOR_BGR2RGB);
  rgb.convertTo(f, CV_32FC3, 1.0 / 255.0);
  cv::subtract(f, cv::Scalar(0.485, 0.456, 0.406), f);
  cv::divide(f, cv::Scalar(0.229, 0.224, 0.225), f);
  return cv::dnn::blobFromImage(f);
}

struct OnnxBackbone::Impl {
  mutable cv::dnn::Net net;
};

OnnxBackbone::OnnxBackbone(const std::filesystem::path& path, int input_size)
    : impl_(std::make_unique<Impl>()), input_size_(input_size) {
  if (!std::filesystem::exists(path)) throw LoadError("backbone weights not found: " + path.string());
  try {
    impl_->net = cv::dnn::readNetFromONNX(path.string());
  } catch (const cv::Exception& e) {
    throw LoadError("cannot load backbone " + path.string() + ": " + e.what());
  }
  if (impl_->net.empty()) throw LoadError("empty backbone network: " + path.string());
  impl_->net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
  impl_->net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);

  for (const auto& name : impl_->net.getLayerNames())
    for (const auto& blob : impl_->net.getLayer(name)->blobs) parameter_count_ += blob.total();

  cv::Mat probe(input_size_, input_size_, CV_8UC3, cv::Scalar::all(0));
  feature_dim_ = static_cast<int>(features(probe).size());
}

OnnxBackbone::~OnnxBackbone() = default;

std::string OnnxBackbone::checksum() const {
  std::string bytes;
  for (const auto& name : impl_->net.getLayerNames())
    for (const auto& blob : impl_->net.getLayer(name)->blobs) {
      const cv::Mat c = blob.isContinuous() ? blob : blob.clone();
      bytes.append(reinterpret_cast<const char*>(c.data), c.total() * c.elemSize());
    }
  return sha256_hex(bytes);
}

Eigen::VectorXd OnnxBackbone::features(const cv::Mat& bgr) const {
  impl_->net.setInput(imagenet_blob(bgr, input_size_));
  cv::Mat out = impl_->net.forward();
  out = out.reshape(1, 1);
  cv::Mat d;
  out.convertTo(d, CV_64F);
  return Eigen::Map<const Eigen::VectorXd>(d.ptr<double>(), static_cast<Eigen::Index>(d.total()));
}

TextureBankBackbone::TextureBankBackbone(int input_size, std::uint64_t seed)
    : input_size_(input_size) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  const int per_filter = 3 * kKernel * kKernel;
  weights_.resize(static_cast<std::size_t>(kFilters * per_filter + kFilters));
  for (int k = 0; k < kFilters; ++k) {
    float* w = weights_.data() + k * per_filter;
    float mean = 0.0f;
    for (int i = 0; i < per_filter; ++i) mean += (w[i] = normal(rng));
    mean /= per_filter;
    float norm = 0.0f;
    for (int i = 0; i < per_filter; ++i) {
      w[i] -= mean;
      norm += w[i] * w[i];
    }
    norm = std::sqrt(norm);
    for (int i = 0; i < per_filter; ++i) w[i] /= norm;
  }
  for (int k = 0; k < kFilters; ++k) weights_[kFilters * per_filter + k] = 0.1f * normal(rng);
}

std::string TextureBankBackbone::checksum() const {
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(weights_.data()),
                                     weights_.size() * sizeof(float)));
}

Eigen::VectorXd TextureBankBackbone::features(const cv::Mat& bgr) const {
  if (bgr.empty() || bgr.type() != CV_8UC3) throw DecodeError("expected a BGR 8-bit image");
  cv::Mat resized, f;
  cv::resize(bgr, resized, cv::Size(input_size_, input_size_), 0, 0, cv::INTER_AREA);
  resized.convertTo(f, CV_32FC3, 1.0 / 255.0);
  cv::Mat channels[3];
  cv::split(f, channels);

  const int per_filter = 3 * kKernel * kKernel;
  Eigen::VectorXd out(feature_dim());
  cv::Mat response, part;
  for (int k = 0; k < kFilters; ++k) {
    response = cv::Mat::zeros(f.size(), CV_32F);
    for (int c = 0; c < 3; ++c) {
      const cv::Mat kernel(kKernel, kKernel, CV_32F,
                           const_cast<float*>(weights_.data() + k * per_filter + c * kKernel * kKernel));
      cv::filter2D(channels[c], part, CV_32F, kernel, cv::Point(-1, -1), 0, cv::BORDER_REFLECT);
      response += part;
    }
    response += weights_[static_cast<std::size_t>(kFilters * per_filter + k)];
    cv::max(response, 0.0f, response);
    cv::Scalar mean, stddev;
    cv::meanStdDev(response, mean, stddev);
    out(2 * k) = mean[0];
    out(2 * k + 1) = stddev[0];
  }
  return out;
}

std::shared_ptr<Backbone> load_backbone(const ModelSpec& spec,
                                        const std::filesystem::path& weights_dir) {
  if (spec.backbone_id == BackboneId::texture_bank)
    return std::make_shared<TextureBankBackbone>(spec.input_size);
  const auto path = spec.weights_path
                        ? *spec.weights_path
                        : weights_dir / (std::string(to_string(spec.backbone_id)) + ".onnx");
  auto net = std::make_shared<OnnxBackbone>(path, spec.input_size);
  const int expected = backbone_info(spec.backbone_id).feature_dim;
  if (net->feature_dim() != expected)
    throw LoadError(path.string() + " yields " + std::to_string(net->feature_dim()) + " features, " +
                    std::string(to_string(spec.backbone_id)) + " has " + std::to_string(expected));
  return net;
}

std::filesystem::path default_weights_dir() {
  if (const char* env = std::getenv("SGF_WEIGHTS_DIR"); env && *env) return env;
  return "weights";
}

}  // namespace sgf
