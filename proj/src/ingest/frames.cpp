#include "sgf/ingest/frames.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sgf/common/error.hpp"

namespace sgf {

VideoFileSource::VideoFileSource(const std::filesystem::path& path) : path_(path) {
  if (!std::filesystem::exists(path) || !capture_.open(path.string()) || !capture_.isOpened())
    throw DecodeError("cannot decode video: " + path.string());
  size_ = {static_cast<int>(capture_.get(cv::CAP_PROP_FRAME_WIDTH)),
           static_cast<int>(capture_.get(cv::CAP_PROP_FRAME_HEIGHT))};
  if (size_.width <= 0 || size_.height <= 0)
    throw DecodeError("video reports no frame size: " + path.string());
}

bool VideoFileSource::read(cv::Mat& frame) { return capture_.read(frame); }

bool VideoFileSource::skip() { return capture_.grab(); }

int frame_stride(double native_fps, double target_fps) {
  if (!(target_fps > 0.0)) throw ArgumentError("target_fps must be > 0");
  if (!(native_fps > 0.0)) throw ArgumentError("native_fps must be > 0");
  if (target_fps > native_fps) throw ArgumentError("target_fps exceeds native_fps");
  // The epsilon keeps exact ratios such as 30/5 from rounding down to 5.
  return std::max(1, static_cast<int>(std::floor(native_fps / target_fps + 1e-9)));
}

std::int64_t expected_frame_count(std::int64_t total_frames, int stride) {
  if (total_frames <= 0) return 0;
  return (total_frames - 1) / stride + 1;
}

void validate_crop(const CropRect& crop, cv::Size source) {
  if (crop.width != kFrameWidth || crop.height != kFrameHeight)
    throw ArgumentError("crop must be " + std::to_string(kFrameWidth) + "x" +
                        std::to_string(kFrameHeight));
  if (crop.x < 0 || crop.y < 0 || crop.x + crop.width > source.width ||
      crop.y + crop.height > source.height)
    throw ArgumentError("crop rectangle exceeds source frame bounds");
}

std::int64_t for_each_frame(FrameSource& source, const TransectDescriptor& descriptor,
                            double target_fps, const CropRect& crop, const FrameSink& sink,
                            const ExtractOptions& options) {
  descriptor.validate();
  const int stride = frame_stride(descriptor.native_fps, target_fps);
  validate_crop(crop, source.frame_size());

  std::int64_t index = 0;
  cv::Mat frame;
  for (;; ++index) {
    const bool on_stride = index % stride == 0;
    const bool wanted = on_stride && (!options.keep || options.keep(index));
    if (!wanted) {
      if (!source.skip()) break;
      continue;
    }
    if (!source.read(frame) || frame.empty()) break;

    FrameRecord rec;
    rec.transect_id = descriptor.transect_id;
    rec.frame_index = index;
    rec.image_id = make_image_id(descriptor.transect_id, index);
    if (options.excluded_image_ids.contains(rec.image_id)) continue;
    rec.video_time_s = static_cast<double>(index) / descriptor.native_fps;
    if (frame.size() != source.frame_size())
      throw DecodeError("frame " + std::to_string(index) + " changed size mid-stream");
    cv::Mat cropped = frame(crop.rect());
    if (cropped.channels() != 3) throw DecodeError("expected 3-channel frames");
    rec.pixels = cropped.clone();
    sink(std::move(rec));
  }
  return index;
}

std::vector<FrameRecord> extract_frames(FrameSource& source, const TransectDescriptor& descriptor,
                                        double target_fps, const CropRect& crop,
                                        const ExtractOptions& options) {
  std::vector<FrameRecord> out;
  for_each_frame(source, descriptor, target_fps, crop,
                 [&](FrameRecord&& r) { out.push_back(std::move(r)); }, options);
  return out;
}

std::vector<FrameRecord> extract_frames(const TransectDescriptor& descriptor, double target_fps,
                                        const CropRect& crop, const ExtractOptions& options) {
  // Argument checks come first so a bad rate is reported before a bad file.
  descriptor.validate();
  frame_stride(descriptor.native_fps, target_fps);
  VideoFileSource source(descriptor.video_path);
  return extract_frames(source, descriptor, target_fps, crop, options);
}

std::vector<std::size_t> sample_positions(std::size_t population, std::size_t count,
                                          std::uint64_t seed) {
  if (count > population)
    throw ArgumentError("sample count " + std::to_string(count) + " exceeds " +
                        std::to_string(population) + " available items");
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<FrameRecord> sample_frames(const std::vector<FrameRecord>& frames, std::size_t count,
                                       std::uint64_t seed) {
  std::vector<FrameRecord> out;
  out.reserve(count);
  for (std::size_t pos : sample_positions(frames.size(), count, seed)) out.push_back(frames[pos]);
  std::stable_sort(out.begin(), out.end(), [](const FrameRecord& a, const FrameRecord& b) {
    return a.frame_index < b.frame_index;
  });
  return out;
}

}  // namespace sgf
