#include <doctest.h>

#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sgf/common/error.hpp"
#include "sgf/enhance/enhancer.hpp"
#include "support/synthetic.hpp"

using namespace sgf;

namespace {

FrameRecord frame(int label = 1, std::uint64_t seed = 1) {
  FrameRecord f;
  f.transect_id = "LYT-12";
  f.frame_index = 30;
  f.image_id = make_image_id(f.transect_id, f.frame_index);
  f.video_time_s = 1.0;
  f.pixels = testing::texture_image(label, seed, {kFrameWidth, kFrameHeight});
  f.geo = make_geofix(55.6, 12.6);
  return f;
}

class Shrinker final : public ImageEnhancer {
 public:
  cv::Mat apply(const cv::Mat& bgr) override { return bgr(cv::Rect(0, 0, 10, 10)).clone(); }
  std::string fingerprint() const override { return "shrink"; }
};

class Counting final : public ImageEnhancer {
 public:
  cv::Mat apply(const cv::Mat& bgr) override {
    ++calls;
    cv::Mat out;
    cv::bitwise_not(bgr, out);
    return out;
  }
  std::string fingerprint() const override { return "invert"; }
  int calls = 0;
};

}  // namespace

TEST_CASE("identity enhancer is byte-identical and keeps identity fields") {
  const auto in = frame();
  const auto out = enhance(in, EnhancerSpec{});
  CHECK(out.image_id == in.image_id);
  CHECK(out.frame_index == in.frame_index);
  CHECK(out.video_time_s == in.video_time_s);
  CHECK(out.geo->latitude == in.geo->latitude);
  CHECK(cv::norm(out.pixels, in.pixels, cv::NORM_INF) == 0.0);
  CHECK(out.pixels.data != in.pixels.data);
}

TEST_CASE("ONNX enhancer runs a channel-swapping network") {
  EnhancerSpec spec{EnhancerKind::external_model, testing::data_file("channel_swap_enhancer.onnx")};
  auto enhancer = make_enhancer(spec);
  const auto in = frame(0, 9);
  const auto out = enhance(in, *enhancer);
  REQUIRE(out.pixels.size() == in.pixels.size());
  REQUIRE(out.pixels.type() == CV_8UC3);
  cv::Mat swapped;
  cv::cvtColor(in.pixels, swapped, cv::COLOR_BGR2RGB);
  CHECK(cv::norm(out.pixels, swapped, cv::NORM_INF) <= 1.0);
  CHECK(enhancer->fingerprint() != "identity");
  CHECK(enhancer->fingerprint() == OnnxEnhancer(*spec.model_path).fingerprint());
}

TEST_CASE("enhancer load and shape failures") {
  testing::TempDir dir("enh");
  CHECK_THROWS_AS(OnnxEnhancer(dir / "missing.onnx"), LoadError);
  std::ofstream(dir / "junk.onnx") << "not a model";
  CHECK_THROWS_AS(OnnxEnhancer(dir / "junk.onnx"), LoadError);
  CHECK_THROWS_AS((EnhancerSpec{EnhancerKind::external_model, std::nullopt}.validate()), ValidationError);
  CHECK(parse_enhancer_kind("external_model") == EnhancerKind::external_model);
  CHECK_THROWS_AS(parse_enhancer_kind("wavenet"), ValidationError);

  Shrinker shrink;
  CHECK_THROWS_AS(enhance(frame(), shrink), AdapterError);
}

TEST_CASE("enhancement cache computes once and writes complete files") {
  testing::TempDir dir("cache");
  Counting invert;
  EnhancementCache cache(dir.path(), invert);
  const auto in = frame();
  CHECK_FALSE(cache.contains(in.image_id));
  const cv::Mat first = cache.get_or_compute(in.image_id, in.pixels);
  CHECK(cache.contains(in.image_id));
  const cv::Mat second = cache.get_or_compute(in.image_id, in.pixels);
  CHECK(invert.calls == 1);
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);
  CHECK(cv::norm(first, second, cv::NORM_INF) == 0.0);
  CHECK(cv::norm(cv::imread(cache.entry_path(in.image_id).string()), first, cv::NORM_INF) == 0.0);
  CHECK(cache.entry_path(in.image_id).parent_path().filename() == "invert");
  for (const auto& e : std::filesystem::directory_iterator(cache.entry_path(in.image_id).parent_path()))
    CHECK(e.path().extension() == ".png");  // no temporaries left behind

  const auto batch = enhance_batch({frame(0, 1), frame(1, 2)}, invert);
  CHECK(batch.size() == 2);
  CHECK(invert.calls == 3);
}

TEST_CASE("train and test enhancement must match") {
  CHECK_NOTHROW(require_matching_enhancement(true, true));
  CHECK_NOTHROW(require_matching_enhancement(false, false));
  CHECK_THROWS_AS(require_matching_enhancement(true, false), ConfigError);
  CHECK_THROWS_AS(require_matching_enhancement(false, true), ConfigError);
}
