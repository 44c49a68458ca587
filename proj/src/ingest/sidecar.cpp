#include "sgf/ingest/sidecar.hpp"

#include <charconv>
#include <fstream>
#include <optional>

#include "sgf/common/csv.hpp"
#include "sgf/common/error.hpp"

namespace sgf {
namespace {

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || v < 0) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

SidecarLoad load_sidecar_geofixes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open sidecar file: " + path.string());
  const auto table = csv::Table::parse(in);
  const auto c_idx = table.column("frame_index");
  const auto c_lat = table.column("lat");
  const auto c_lon = table.column("lon");
  const auto c_depth = table.find_column("depth_m");
  const auto c_heading = table.find_column("heading_deg");
  const auto c_time = table.find_column("timestamp_utc");

  SidecarLoad out;
  std::size_t line = 1;
  for (const auto& row : table.rows()) {
    ++line;
    auto cell = [&](std::optional<std::size_t> c) -> std::string {
      return c && *c < row.size() ? row[*c] : std::string{};
    };
    const auto idx = parse_int(cell(c_idx));
    const auto lat = parse_double(cell(c_lat));
    const auto lon = parse_double(cell(c_lon));
    if (!idx || !lat || !lon || !latitude_in_bounds(*lat) || !longitude_in_bounds(*lon)) {
      ++out.skipped_rows;
      continue;
    }
    const auto depth = parse_double(cell(c_depth));
    const auto heading = parse_double(cell(c_heading));
    const auto stamp_text = cell(c_time);
    std::optional<Instant> stamp;
    if (!stamp_text.empty()) stamp = parse_instant(stamp_text);
    if ((depth && *depth < 0.0) || (!stamp_text.empty() && !stamp)) {
      ++out.skipped_rows;
      continue;
    }
    GeoFix fix = make_geofix(*lat, *lon, depth, heading, stamp);
    if (out.fixes.contains(*idx))
      out.warnings.push_back("line " + std::to_string(line) + ": duplicate frame_index " +
                             std::to_string(*idx) + ", later row wins");
    out.fixes[*idx] = fix;
  }
  if (out.fixes.empty())
    throw FormatError("sidecar file has no valid rows: " + path.string());
  return out;
}

void write_sidecar_geofixes(const std::filesystem::path& path, const GeoFixTable& fixes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write sidecar file: " + path.string());
  csv::write_row(out, {"frame_index", "lat", "lon", "depth_m", "heading_deg", "timestamp_utc"});
  for (const auto& [idx, fix] : fixes) {
    csv::write_row(out, {std::to_string(idx), format_number(fix.latitude),
                         format_number(fix.longitude),
                         fix.depth_m ? format_number(*fix.depth_m) : "",
                         fix.heading_deg ? format_number(*fix.heading_deg) : "",
                         fix.timestamp_utc ? format_instant(*fix.timestamp_utc) : ""});
  }
}

}  // namespace sgf
