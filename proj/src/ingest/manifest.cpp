#include "sgf/ingest/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "sgf/common/error.hpp"

namespace sgf {

using nlohmann::json;

json to_json(const ManifestEntry& e) {
  json j{{"image_id", e.image_id},
         {"transect_id", e.transect_id},
         {"frame_index", e.frame_index},
         {"video_time_s", e.video_time_s},
         {"file_path", e.file_path}};
  if (e.geo) {
    j["lat"] = e.geo->latitude;
    j["lon"] = e.geo->longitude;
    if (e.geo->depth_m) j["depth_m"] = *e.geo->depth_m;
    if (e.geo->heading_deg) j["heading_deg"] = *e.geo->heading_deg;
    if (e.geo->timestamp_utc) j["timestamp_utc"] = format_instant(*e.geo->timestamp_utc);
  }
  if (!e.enhancement.empty()) j["enhancement"] = e.enhancement;
  return j;
}

ManifestEntry manifest_entry_from_json(const json& j) {
  ManifestEntry e;
  try {
    e.image_id = j.at("image_id").get<std::string>();
    e.transect_id = j.at("transect_id").get<std::string>();
    e.frame_index = j.at("frame_index").get<std::int64_t>();
    e.video_time_s = j.at("video_time_s").get<double>();
    e.file_path = j.at("file_path").get<std::string>();
    if (j.contains("lat") && j.contains("lon") && !j["lat"].is_null() && !j["lon"].is_null()) {
      std::optional<double> depth, heading;
      std::optional<Instant> stamp;
      if (j.contains("depth_m") && !j["depth_m"].is_null()) depth = j["depth_m"].get<double>();
      if (j.contains("heading_deg") && !j["heading_deg"].is_null())
        heading = j["heading_deg"].get<double>();
      if (j.contains("timestamp_utc") && j["timestamp_utc"].is_string())
        stamp = parse_instant(j["timestamp_utc"].get<std::string>());
      e.geo = make_geofix(j["lat"].get<double>(), j["lon"].get<double>(), depth, heading, stamp);
    }
    if (j.contains("enhancement")) e.enhancement = j["enhancement"].get<std::string>();
  } catch (const json::exception& ex) {
    throw FormatError(std::string("manifest row: ") + ex.what());
  }
  return e;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(manifest_entry_from_json(json::parse(line)));
    } catch (const json::parse_error& ex) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + ex.what());
    }
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  for (const auto& e : entries) out << to_json(e).dump() << '\n';
}

void append_manifest(const std::filesystem::path& path, const ManifestEntry& entry) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to manifest: " + path.string());
  out << to_json(entry).dump() << '\n';
}

ManifestEntry store_frame(const FrameRecord& frame, const std::filesystem::path& dir,
                          const std::string& ext) {
  std::filesystem::create_directories(dir);
  const auto file = dir / (frame.image_id + "." + ext);
  if (!cv::imwrite(file.string(), frame.pixels)) throw IoError("cannot write " + file.string());
  return {frame.image_id, frame.transect_id, frame.frame_index, frame.video_time_s, file.string(),
          frame.geo, ""};
}

}  // namespace sgf
