#include "sgf/ingest/overlay.hpp"

#include <cmath>
#include <regex>

#include "sgf/common/error.hpp"

namespace sgf {
namespace {

const std::regex& lat_pattern() {
  static const std::regex re(R"((\d{1,2}(?:\.\d+)?)\s*(?:°)?\s*([NS])\b)");
  return re;
}
const std::regex& lon_pattern() {
  static const std::regex re(R"((\d{1,3}(?:\.\d+)?)\s*(?:°)?\s*([EW])\b)");
  return re;
}
const std::regex& depth_pattern() {
  static const std::regex re(R"((\d+(?:\.\d+)?)\s*m\b)");
  return re;
}
const std::regex& heading_pattern() {
  static const std::regex re(R"((?:HDG|COG|hdg|cog|[Hh]eading)\s*:?\s*(\d+(?:\.\d+)?))");
  return re;
}
const std::regex& timestamp_pattern() {
  static const std::regex re(R"(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?Z?)");
  return re;
}
const std::regex& bare_number() {
  static const std::regex re(R"(^\s*(-?\d+(?:\.\d+)?)\s*(?:°|deg|m)?\s*$)");
  return re;
}

void accept_latitude(double v, OverlayReading& r) {
  if (latitude_in_bounds(v)) r.latitude = v;
  else r.rejected.push_back(OverlayField::latitude);
}
void accept_longitude(double v, OverlayReading& r) {
  if (longitude_in_bounds(v)) r.longitude = v;
  else r.rejected.push_back(OverlayField::longitude);
}
void accept_depth(double v, OverlayReading& r) {
  if (v >= 0.0) r.depth_m = v;
  else r.rejected.push_back(OverlayField::depth);
}

std::optional<double> signed_coordinate(const std::smatch& m) {
  const double v = std::stod(m[1].str());
  const char hemi = m[2].str().front();
  return (hemi == 'S' || hemi == 'W') ? -v : v;
}

}  // namespace

std::string_view to_string(OverlayField f) {
  switch (f) {
    case OverlayField::combined: return "combined";
    case OverlayField::latitude: return "latitude";
    case OverlayField::longitude: return "longitude";
    case OverlayField::depth: return "depth";
    case OverlayField::heading: return "heading";
    case OverlayField::timestamp: return "timestamp";
  }
  return "?";
}

bool OverlayReading::empty() const {
  return !latitude && !longitude && !depth_m && !heading_deg && !timestamp_utc;
}

std::optional<GeoFix> OverlayReading::geofix() const {
  if (!latitude || !longitude) return std::nullopt;
  return make_geofix(*latitude, *longitude, depth_m, heading_deg, timestamp_utc);
}

void parse_overlay_field(OverlayField field, std::string_view text, OverlayReading& into) {
  const std::string s(text);
  if (!into.raw_text.empty()) into.raw_text += " | ";
  into.raw_text += s;
  std::smatch m;

  switch (field) {
    case OverlayField::combined: {
      // Match with patterns in an order that keeps coordinates from being
      // mistaken for depths: strip each match before the next pattern runs.
      std::string rest = s;
      if (std::regex_search(rest, m, lat_pattern())) {
        accept_latitude(*signed_coordinate(m), into);
        rest = m.prefix().str() + " " + m.suffix().str();
      }
      if (std::regex_search(rest, m, lon_pattern())) {
        accept_longitude(*signed_coordinate(m), into);
        rest = m.prefix().str() + " " + m.suffix().str();
      }
      if (std::regex_search(rest, m, timestamp_pattern())) {
        into.timestamp_utc = parse_instant(m.str());
        rest = m.prefix().str() + " " + m.suffix().str();
      }
      if (std::regex_search(rest, m, heading_pattern())) {
        into.heading_deg = normalize_heading(std::stod(m[1].str()));
        rest = m.prefix().str() + " " + m.suffix().str();
      }
      if (std::regex_search(rest, m, depth_pattern())) accept_depth(std::stod(m[1].str()), into);
      break;
    }
    case OverlayField::latitude:
      if (std::regex_search(s, m, lat_pattern())) accept_latitude(*signed_coordinate(m), into);
      else if (std::regex_match(s, m, bare_number())) accept_latitude(std::stod(m[1].str()), into);
      break;
    case OverlayField::longitude:
      if (std::regex_search(s, m, lon_pattern())) accept_longitude(*signed_coordinate(m), into);
      else if (std::regex_match(s, m, bare_number())) accept_longitude(std::stod(m[1].str()), into);
      break;
    case OverlayField::depth:
      if (std::regex_match(s, m, bare_number())) accept_depth(std::stod(m[1].str()), into);
      break;
    case OverlayField::heading:
      if (std::regex_search(s, m, heading_pattern()) || std::regex_match(s, m, bare_number())) {
        const double h = std::stod(m[1].str());
        if (std::isfinite(h)) into.heading_deg = normalize_heading(h);
        else into.rejected.push_back(OverlayField::heading);
      }
      break;
    case OverlayField::timestamp:
      if (std::regex_search(s, m, timestamp_pattern())) into.timestamp_utc = parse_instant(m.str());
      break;
  }
}

OverlayReading parse_overlay_text(std::string_view text) {
  OverlayReading r;
  parse_overlay_field(OverlayField::combined, text, r);
  if (r.empty()) throw ParseError("no overlay field recognized", std::string(text));
  return r;
}

OverlayReading parse_overlay(const cv::Mat& frame, const OverlayTemplate& layout,
                             TextRecognizer& engine) {
  if (layout.boxes.empty()) throw ArgumentError("overlay template has no field boxes");
  const cv::Rect bounds(0, 0, frame.cols, frame.rows);
  OverlayReading r;
  for (const auto& [field, box] : layout.boxes) {
    const cv::Rect clipped = box & bounds;
    if (clipped.empty()) continue;
    parse_overlay_field(field, engine.recognize(frame(clipped)), r);
  }
  if (r.empty()) throw ParseError("no overlay field recognized", r.raw_text);
  return r;
}

}  // namespace sgf
