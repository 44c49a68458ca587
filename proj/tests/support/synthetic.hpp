#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <opencv2/core.hpp>

namespace sgf::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path data_file(const std::string& name);

// Label 1: dense dark-green vertical blades over sand. Label 0: bare sand
// speckle. Distinct textures, randomised by seed.
cv::Mat texture_image(int label, std::uint64_t seed, cv::Size size = {320, 125});

// Writes an MJPG .avi whose frame i is make_frame(i).
void write_video(const std::filesystem::path& path, int frames, double fps, cv::Size size,
                 const std::function<cv::Mat(int)>& make_frame);

// Flat grey frame whose level encodes the index (survives JPEG compression).
cv::Mat index_frame(int index, cv::Size size);
int decode_index_level(const cv::Mat& frame);

}  // namespace sgf::testing
