#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sgf/coverage/predictions.hpp"
#include "sgf/metrics/metrics.hpp"

namespace sgf::coverage {

// Local equirectangular projection around an origin, in metres.
struct LocalProjection {
  double lat0 = 0.0;
  double lon0 = 0.0;

  static constexpr double kEarthRadiusM = 6'371'008.8;

  double x(double lon) const;  // east
  double y(double lat) const;  // north
  double lat(double y) const;
  double lon(double x) const;
};

struct GeoCell {
  int row = 0;
  int col = 0;
  GeoFix center;
  double presence_fraction = 0.0;
  std::size_t n_predictions = 0;
};

struct Heatmap {
  LocalProjection projection;  // centred on the centroid of the fused predictions
  double cell_size_m = 20.0;
  std::vector<GeoCell> cells;  // non-empty cells sorted by (row, col)
};

// Bins geo-fused predictions into square cells. Records without geo are
// ignored. Throws EmptyInputError when none has geo, ArgumentError for a
// non-positive cell size.
Heatmap heatmap(std::span<const PredictionRecord> records, double cell_size_m = 20.0);

struct DepthBin {
  double lower_m = 0.0;  // bin is [lower_m, upper_m)
  double upper_m = 0.0;
  std::size_t n_predictions = 0;
  std::size_t n_present = 0;
  double presence_percentage = 0.0;
};

// Presence percentage per depth bin [k*w, (k+1)*w); empty bins omitted.
// Throws EmptyInputError when no record carries a depth.
std::vector<DepthBin> depth_profile(std::span<const PredictionRecord> records, double bin_width_m = 1.0);

// FeatureCollection with one Point per geo-fused prediction and, when a
// heatmap is given, one Polygon per cell.
nlohmann::json to_geojson(std::span<const PredictionRecord> records, const Heatmap* grid = nullptr);
void write_geojson(const std::filesystem::path& path, const nlohmann::json& collection);

struct TimedValue {
  double time_s;
  double value;
};

struct AlignedSeries {
  std::vector<double> time_s;  // common 1 Hz grid
  std::vector<double> coverage;
  std::vector<double> expert;
};

// Shifts expert times by offset_s, then samples both series by linear
// interpolation on whole seconds inside their common time span.
AlignedSeries align_to_grid(std::span<const TimedValue> coverage, std::span<const TimedValue> expert,
                            double offset_s = 0.0, double step_s = 1.0);

// Spearman test between a TM series and expert percentages after alignment.
metrics::SpearmanResult compare_with_expert(const CoverageSeries& tm, std::span<const TimedValue> expert,
                                            double offset_s = 0.0);

}  // namespace sgf::coverage
