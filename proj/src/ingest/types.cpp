#include "sgf/ingest/types.hpp"

#include <cmath>
#include <numbers>

#include "sgf/common/error.hpp"

namespace sgf {

void TransectDescriptor::validate() const {
  if (transect_id.empty()) throw ValidationError("transect: empty transect_id");
  if (!(native_fps > 0.0)) throw ValidationError("transect " + transect_id + ": native_fps must be > 0");
  if (length_km < 0.0) throw ValidationError("transect " + transect_id + ": negative length_km");
  if (depth_range_m.min_m > depth_range_m.max_m)
    throw ValidationError("transect " + transect_id + ": depth min exceeds max");
}

bool latitude_in_bounds(double lat) { return std::isfinite(lat) && lat >= -90.0 && lat <= 90.0; }
bool longitude_in_bounds(double lon) { return std::isfinite(lon) && lon >= -180.0 && lon <= 180.0; }

double normalize_heading(double degrees) {
  double h = std::fmod(degrees, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h = 0.0;  // fmod of tiny negatives can round up to 360
  return h;
}

GeoFix make_geofix(double latitude, double longitude, std::optional<double> depth_m,
                   std::optional<double> heading_deg, std::optional<Instant> timestamp_utc) {
  if (!latitude_in_bounds(latitude)) throw ValidationError("latitude out of bounds");
  if (!longitude_in_bounds(longitude)) throw ValidationError("longitude out of bounds");
  if (depth_m && !(std::isfinite(*depth_m) && *depth_m >= 0.0))
    throw ValidationError("depth must be nonnegative");
  GeoFix fix{latitude, longitude, depth_m, std::nullopt, timestamp_utc};
  if (heading_deg) {
    if (!std::isfinite(*heading_deg)) throw ValidationError("heading must be finite");
    fix.heading_deg = normalize_heading(*heading_deg);
  }
  return fix;
}

GeoFix offset_along_track(const GeoFix& fix, double distance_m) {
  if (!fix.heading_deg || distance_m == 0.0) return fix;
  constexpr double kEarthRadius = 6371008.8;
  const double bearing = *fix.heading_deg * std::numbers::pi / 180.0;
  const double north = -distance_m * std::cos(bearing);
  const double east = -distance_m * std::sin(bearing);
  GeoFix out = fix;
  out.latitude += north / kEarthRadius * 180.0 / std::numbers::pi;
  out.longitude += east / (kEarthRadius * std::cos(fix.latitude * std::numbers::pi / 180.0)) *
                   180.0 / std::numbers::pi;
  return out;
}

std::string make_image_id(const std::string& transect_id, std::int64_t frame_index) {
  return transect_id + "_" + std::to_string(frame_index);
}

bool has_standard_shape(const cv::Mat& pixels) {
  return pixels.cols == kFrameWidth && pixels.rows == kFrameHeight && pixels.type() == CV_8UC3;
}

}  // namespace sgf
