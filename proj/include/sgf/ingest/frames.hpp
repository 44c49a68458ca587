#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/videoio.hpp>

#include "sgf/ingest/types.hpp"

namespace sgf {

struct CropRect {
  int x = 0;
  int y = 0;
  int width = kFrameWidth;
  int height = kFrameHeight;

  cv::Rect rect() const { return {x, y, width, height}; }
};

// Sequential frame decoder. skip() advances without decoding pixels.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual cv::Size frame_size() const = 0;
  virtual bool read(cv::Mat& frame) = 0;
  virtual bool skip() = 0;
};

class VideoFileSource final : public FrameSource {
 public:
  // Throws DecodeError naming the path when the container cannot be opened.
  explicit VideoFileSource(const std::filesystem::path& path);

  cv::Size frame_size() const override { return size_; }
  bool read(cv::Mat& frame) override;
  bool skip() override;

 private:
  std::filesystem::path path_;
  cv::VideoCapture capture_;
  cv::Size size_;
};

// floor(native / target); throws ArgumentError unless 0 < target <= native.
int frame_stride(double native_fps, double target_fps);

// Number of frames kept from a `total_frames` clip at `stride`.
std::int64_t expected_frame_count(std::int64_t total_frames, int stride);

// Throws ArgumentError unless the rectangle is kFrameWidth x kFrameHeight and
// lies inside a `source` sized frame.
void validate_crop(const CropRect& crop, cv::Size source);

struct ExtractOptions {
  // Frames whose image_id is listed here (e.g. shot above the sea surface)
  // are dropped from the output.
  std::unordered_set<std::string> excluded_image_ids;
  // When set, only frame indices accepted by the predicate are decoded.
  std::function<bool(std::int64_t frame_index)> keep;
};

using FrameSink = std::function<void(FrameRecord&&)>;

// Streams stride-sampled, cropped frames to `sink` in frame order. Returns the
// number of source frames seen.
std::int64_t for_each_frame(FrameSource& source, const TransectDescriptor& descriptor,
                            double target_fps, const CropRect& crop, const FrameSink& sink,
                            const ExtractOptions& options = {});

std::vector<FrameRecord> extract_frames(FrameSource& source, const TransectDescriptor& descriptor,
                                        double target_fps, const CropRect& crop,
                                        const ExtractOptions& options = {});

// Opens descriptor.video_path.
std::vector<FrameRecord> extract_frames(const TransectDescriptor& descriptor, double target_fps,
                                        const CropRect& crop, const ExtractOptions& options = {});

// Sorted positions of a uniform sample without replacement of `count` out of
// `population`, deterministic in `seed`. Throws ArgumentError if count > population.
std::vector<std::size_t> sample_positions(std::size_t population, std::size_t count,
                                          std::uint64_t seed);

// Uniform sample preserving frame_index order.
std::vector<FrameRecord> sample_frames(const std::vector<FrameRecord>& frames, std::size_t count,
                                       std::uint64_t seed);

}  // namespace sgf
