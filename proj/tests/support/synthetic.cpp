#include "support/synthetic.hpp"

#include <atomic>
#include <random>
#include <stdexcept>

#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>
#include <unistd.h>

namespace sgf::testing {
namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("sgf-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path data_file(const std::string& name) { return fs::path(SGF_TEST_DATA_DIR) / name; }

cv::Mat texture_image(int label, std::uint64_t seed, cv::Size size) {
  std::mt19937_64 rng(seed * 2 + static_cast<std::uint64_t>(label));
  std::uniform_int_distribution<int> jitter(-12, 12);
  cv::Mat img(size, CV_8UC3, cv::Scalar(150 + jitter(rng), 175 + jitter(rng), 190 + jitter(rng)));
  cv::Mat noise(size, CV_8UC3);
  cv::theRNG().state = seed + 1;
  cv::randn(noise, cv::Scalar::all(0), cv::Scalar::all(18));
  img += noise;
  if (label == 1) {
    std::uniform_int_distribution<int> x(0, size.width - 1), w(2, 5), g(60, 110);
    const int blades = size.width / 6;
    for (int i = 0; i < blades; ++i) {
      const int x0 = x(rng);
      cv::line(img, {x0, size.height - 1}, {x0 + jitter(rng), size.height / 6}, cv::Scalar(30, g(rng), 40), w(rng));
    }
  }
  return img;
}

void write_video(const fs::path& path, int frames, double fps, cv::Size size,
                 const std::function<cv::Mat(int)>& make_frame) {
  cv::VideoWriter writer(path.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps, size);
  if (!writer.isOpened()) throw std::runtime_error("cannot open video writer for " + path.string());
  for (int i = 0; i < frames; ++i) writer.write(make_frame(i));
}

cv::Mat index_frame(int index, cv::Size size) {
  return cv::Mat(size, CV_8UC3, cv::Scalar::all(10 + 2 * index));
}

int decode_index_level(const cv::Mat& frame) {
  const double mean = cv::mean(frame)[0];
  return static_cast<int>(std::lround((mean - 10.0) / 2.0));
}

}  // namespace sgf::testing
