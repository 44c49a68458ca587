#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "sgf/ingest/types.hpp"

namespace sgf {

enum class OverlayField { combined, latitude, longitude, depth, heading, timestamp };

std::string_view to_string(OverlayField f);

// Pixel box per overlay field in the uncropped video frame. A `combined` box
// holds a line such as "55.7061 N, 12.6043 E, 5.5 m" parsed with all field
// patterns at once. The layout is a deployment-time setting.
struct OverlayTemplate {
  std::map<OverlayField, cv::Rect> boxes;
};

// Character-recognition engine adapter.
class TextRecognizer {
 public:
  virtual ~TextRecognizer() = default;
  virtual std::string recognize(const cv::Mat& region) = 0;
};

// Every field recognized on one frame. Out-of-bounds values are dropped and
// listed in `rejected`.
struct OverlayReading {
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::optional<double> depth_m;
  std::optional<double> heading_deg;
  std::optional<Instant> timestamp_utc;
  std::vector<OverlayField> rejected;
  std::string raw_text;

  bool empty() const;
  // A GeoFix requires both coordinates.
  std::optional<GeoFix> geofix() const;
};

// Runs all field patterns over free text. Throws ParseError (carrying the
// text) when nothing parses.
OverlayReading parse_overlay_text(std::string_view text);

// Parses text recognized from a single-field box.
void parse_overlay_field(OverlayField field, std::string_view text, OverlayReading& into);

OverlayReading parse_overlay(const cv::Mat& frame, const OverlayTemplate& layout,
                             TextRecognizer& engine);

}  // namespace sgf
