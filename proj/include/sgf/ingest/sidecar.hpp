#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sgf/ingest/types.hpp"

namespace sgf {

using GeoFixTable = std::map<std::int64_t, GeoFix>;

struct SidecarLoad {
  GeoFixTable fixes;
  std::size_t skipped_rows = 0;
  std::vector<std::string> warnings;
};

// CSV with header frame_index,lat,lon,depth_m,heading_deg,timestamp_utc.
// Rows with malformed or out-of-bounds coordinates are skipped and counted; a
// repeated frame_index keeps the later row and records a warning.
// Throws IoError for a missing file, FormatError when no row is valid.
SidecarLoad load_sidecar_geofixes(const std::filesystem::path& path);

void write_sidecar_geofixes(const std::filesystem::path& path, const GeoFixTable& fixes);

}  // namespace sgf
