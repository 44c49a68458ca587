#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <opencv2/core.hpp>

#include "sgf/common/time.hpp"

namespace sgf {

inline constexpr int kFrameWidth = 1280;
inline constexpr int kFrameHeight = 500;

struct DepthRange {
  double min_m = 0.0;
  double max_m = 0.0;
};

struct TransectDescriptor {
  std::string transect_id;
  std::filesystem::path video_path;
  double native_fps = 30.0;
  std::chrono::year_month_day recorded_on{};
  double length_km = 0.0;
  DepthRange depth_range_m;

  // Throws ValidationError on fps <= 0, negative length or min > max depth.
  void validate() const;
};

// Position fix read from the video overlay or a sidecar log.
struct GeoFix {
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<double> depth_m;
  std::optional<double> heading_deg;
  std::optional<Instant> timestamp_utc;
};

bool latitude_in_bounds(double lat);
bool longitude_in_bounds(double lon);

// Maps any finite heading into [0, 360).
double normalize_heading(double degrees);

// Validates bounds and normalizes the heading. Throws ValidationError.
GeoFix make_geofix(double latitude, double longitude, std::optional<double> depth_m = {},
                   std::optional<double> heading_deg = {},
                   std::optional<Instant> timestamp_utc = {});

// Shifts a fix `distance_m` metres against its heading, i.e. from the vessel
// antenna back towards a towed sled. Fixes without heading are returned as is.
GeoFix offset_along_track(const GeoFix& fix, double distance_m);

struct FrameRecord {
  std::string image_id;
  std::string transect_id;
  std::int64_t frame_index = 0;
  double video_time_s = 0.0;
  cv::Mat pixels;  // BGR, kFrameHeight x kFrameWidth, CV_8UC3
  std::optional<GeoFix> geo;
};

// "<transect_id>_<frame_index>"
std::string make_image_id(const std::string& transect_id, std::int64_t frame_index);

bool has_standard_shape(const cv::Mat& pixels);

}  // namespace sgf
