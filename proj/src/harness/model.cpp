#include "sgf/harness/model.hpp"

#include <utility>

#include "sgf/common/error.hpp"

namespace sgf {

Classifier::Classifier(ModelSpec spec, std::shared_ptr<const Backbone> backbone, Head head)
    : spec_(std::move(spec)), backbone_(std::move(backbone)), head_(std::move(head)) {
  if (!backbone_) throw ArgumentError("classifier needs a backbone");
  if (head_.in() != backbone_->feature_dim())
    throw ArgumentError("head input width does not match backbone features");
}

Eigen::VectorXd Classifier::probabilities(const Eigen::MatrixXd& features) const {
  return head_.logits(features).transpose().unaryExpr(&Head::sigmoid);
}

double Classifier::probability(const cv::Mat& bgr) const {
  const Eigen::MatrixXd x = backbone_->features(bgr);
  return probabilities(x)(0);
}

Classifier build_model(const ModelSpec& spec, std::uint64_t seed,
                       const std::filesystem::path& weights_dir) {
  spec.validate();
  auto backbone = load_backbone(spec, weights_dir);
  Head head(backbone->feature_dim(), spec.head_layer1, spec.head_layer2);
  head.initialize(seed);
  return Classifier(spec, std::move(backbone), std::move(head));
}

FeatureSet embed(const Backbone& backbone, std::span<const LabelledImage> images,
                 ImageEnhancer* enhancer) {
  FeatureSet fs;
  const auto n = static_cast<Eigen::Index>(images.size());
  fs.features.resize(backbone.feature_dim(), n);
  fs.labels.resize(n);
  fs.image_ids.reserve(images.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& img = images[static_cast<std::size_t>(i)];
    if (img.label != 0 && img.label != 1) throw ArgumentError("labels must be 0 or 1");
    fs.features.col(i) = backbone.features(enhancer ? enhancer->apply(img.pixels) : img.pixels);
    fs.labels(i) = img.label;
    fs.image_ids.push_back(img.image_id);
  }
  return fs;
}

std::vector<int> binarize(std::span<const double> probabilities, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ArgumentError("threshold must be in (0, 1)");
  std::vector<int> out;
  out.reserve(probabilities.size());
  for (double p : probabilities) out.push_back(p >= threshold ? 1 : 0);
  return out;
}

}  // namespace sgf
