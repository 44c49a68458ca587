#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sgf/ingest/types.hpp"

namespace sgf {

// One row of the frame manifest (JSON Lines).
struct ManifestEntry {
  std::string image_id;
  std::string transect_id;
  std::int64_t frame_index = 0;
  double video_time_s = 0.0;
  std::string file_path;
  std::optional<GeoFix> geo;
  // Fingerprint of the enhancer applied to the stored image; empty = raw.
  std::string enhancement;
};

nlohmann::json to_json(const ManifestEntry& e);
ManifestEntry manifest_entry_from_json(const nlohmann::json& j);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
void append_manifest(const std::filesystem::path& path, const ManifestEntry& entry);

// Writes pixels as <dir>/<image_id>.<ext> and returns the manifest row.
ManifestEntry store_frame(const FrameRecord& frame, const std::filesystem::path& dir,
                          const std::string& ext = "png");

}  // namespace sgf
