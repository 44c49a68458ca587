#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sgf/coverage/temporal.hpp"
#include "sgf/ingest/sidecar.hpp"
#include "sgf/ingest/types.hpp"

namespace sgf::coverage {

struct PredictionRecord {
  std::string image_id;
  std::string transect_id;
  std::int64_t frame_index = 0;
  double video_time_s = 0.0;
  double probability = 0.0;
  int binary = 0;
  std::optional<GeoFix> geo;
  std::optional<double> geo_join_dt_s;  // |prediction time - fix time| of the joined fix
};

nlohmann::json to_json(const PredictionRecord& r);
PredictionRecord prediction_from_json(const nlohmann::json& j);

// JSON Lines, one record per line.
void write_predictions(std::ostream& out, std::span<const PredictionRecord> records);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::istream& in);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

// Throws ArgumentError if any binary value disagrees with probability >= threshold.
void check_threshold_consistency(std::span<const PredictionRecord> records, double threshold);

struct StreamGap {
  std::size_t after_index;  // gap lies between records [after_index] and [after_index + 1]
  double spacing_s;
};

struct StreamCheck {
  double nominal_spacing_s = 0.0;
  std::vector<StreamGap> gaps;         // spacing above 120% of nominal
  std::vector<StreamGap> short_steps;  // spacing below 80% of nominal
  bool regular() const noexcept { return gaps.empty() && short_steps.empty(); }
};

// Checks that consecutive records are frame_stride / frames_per_second apart
// within 20%. Nothing is interpolated. Throws ArgumentError for unsorted
// input or non-positive rates.
StreamCheck stride_stream(double frames_per_second, int frame_stride,
                          std::span<const PredictionRecord> records);

// TM over the binary (or probability) column of one transect's stream.
CoverageSeries coverage_series(std::span<const PredictionRecord> records, int r,
                               double samples_per_second, bool use_probability = false);

// Groups records by transect_id, keeping stream order within each group.
std::vector<std::vector<PredictionRecord>> split_by_transect(std::span<const PredictionRecord> records);

// transect_id,start_index,video_time_s,tm_value
void write_coverage_csv(std::ostream& out, std::span<const CoverageSeries> series);
void write_coverage_csv(const std::filesystem::path& path, std::span<const CoverageSeries> series);

struct GeoJoinOptions {
  double native_fps = 30.0;       // converts fix frame indices to seconds
  double time_offset_s = 0.0;     // added to prediction times before matching
  double max_distance_s = 5.0;
  double sled_offset_m = 0.0;     // distance the camera trails the positioning antenna
};

// Attaches to each record the fix nearest in time; ties go to the earlier
// fix. Records with no fix within max_distance_s keep no geo.
std::vector<PredictionRecord> fuse_geo(std::span<const PredictionRecord> records,
                                       const GeoFixTable& fixes, const GeoJoinOptions& options = {});

}  // namespace sgf::coverage
