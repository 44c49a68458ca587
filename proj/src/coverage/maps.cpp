#include "sgf/coverage/maps.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>

#include "sgf/common/error.hpp"

namespace sgf::coverage {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

double LocalProjection::x(double lon) const { return kEarthRadiusM * (lon - lon0) * kDeg * std::cos(lat0 * kDeg); }
double LocalProjection::y(double lat) const { return kEarthRadiusM * (lat - lat0) * kDeg; }
double LocalProjection::lat(double y) const { return lat0 + y / kEarthRadiusM / kDeg; }
double LocalProjection::lon(double x) const { return lon0 + x / (kEarthRadiusM * std::cos(lat0 * kDeg)) / kDeg; }

Heatmap heatmap(std::span<const PredictionRecord> records, double cell_size_m) {
  if (!(cell_size_m > 0.0)) throw ArgumentError("cell_size_m must be positive");
  Heatmap h;
  h.cell_size_m = cell_size_m;
  double lat_sum = 0.0, lon_sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records)
    if (r.geo) {
      lat_sum += r.geo->latitude;
      lon_sum += r.geo->longitude;
      ++n;
    }
  if (n == 0) throw EmptyInputError("no geo-fused predictions");
  h.projection = {lat_sum / double(n), lon_sum / double(n)};

  std::map<std::pair<int, int>, std::pair<std::size_t, std::size_t>> acc;  // (row, col) -> (n, present)
  for (const auto& r : records) {
    if (!r.geo) continue;
    const int col = static_cast<int>(std::floor(h.projection.x(r.geo->longitude) / cell_size_m));
    const int row = static_cast<int>(std::floor(h.projection.y(r.geo->latitude) / cell_size_m));
    auto& [count, present] = acc[{row, col}];
    ++count;
    present += r.binary == 1;
  }
  for (const auto& [key, v] : acc) {
    GeoCell c;
    c.row = key.first;
    c.col = key.second;
    c.center.latitude = h.projection.lat((c.row + 0.5) * cell_size_m);
    c.center.longitude = h.projection.lon((c.col + 0.5) * cell_size_m);
    c.n_predictions = v.first;
    c.presence_fraction = double(v.second) / double(v.first);
    h.cells.push_back(c);
  }
  return h;
}

std::vector<DepthBin> depth_profile(std::span<const PredictionRecord> records, double bin_width_m) {
  if (!(bin_width_m > 0.0)) throw ArgumentError("bin_width_m must be positive");
  std::map<long long, std::pair<std::size_t, std::size_t>> acc;
  for (const auto& r : records) {
    if (!r.geo || !r.geo->depth_m) continue;
    auto& [count, present] = acc[static_cast<long long>(std::floor(*r.geo->depth_m / bin_width_m))];
    ++count;
    present += r.binary == 1;
  }
  if (acc.empty()) throw EmptyInputError("no predictions with depth");
  std::vector<DepthBin> out;
  for (const auto& [k, v] : acc)
    out.push_back({double(k) * bin_width_m, double(k + 1) * bin_width_m, v.first, v.second,
                   100.0 * double(v.second) / double(v.first)});
  return out;
}

nlohmann::json to_geojson(std::span<const PredictionRecord> records, const Heatmap* grid) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& r : records) {
    if (!r.geo) continue;
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "Point"}, {"coordinates", {r.geo->longitude, r.geo->latitude}}}},
         {"properties",
          {{"image_id", r.image_id},
           {"transect_id", r.transect_id},
           {"probability", r.probability},
           {"binary", r.binary},
           {"depth_m", r.geo->depth_m ? nlohmann::json(*r.geo->depth_m) : nlohmann::json(nullptr)}}}});
  }
  if (grid) {
    const double s = grid->cell_size_m;
    const auto& p = grid->projection;
    for (const auto& c : grid->cells) {
      const double x0 = c.col * s, x1 = x0 + s, y0 = c.row * s, y1 = y0 + s;
      nlohmann::json ring = nlohmann::json::array({{p.lon(x0), p.lat(y0)},
                                                   {p.lon(x1), p.lat(y0)},
                                                   {p.lon(x1), p.lat(y1)},
                                                   {p.lon(x0), p.lat(y1)},
                                                   {p.lon(x0), p.lat(y0)}});
      features.push_back({{"type", "Feature"},
                          {"geometry", {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring})}}},
                          {"properties",
                           {{"row", c.row},
                            {"col", c.col},
                            {"presence_fraction", c.presence_fraction},
                            {"n_predictions", c.n_predictions}}}});
    }
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

void write_geojson(const std::filesystem::path& path, const nlohmann::json& collection) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << collection.dump() << '\n';
}

namespace {

// Linear interpolation on a time-sorted series; t must lie within its span.
double interpolate(std::span<const TimedValue> s, double t) {
  auto it = std::lower_bound(s.begin(), s.end(), t, [](const TimedValue& v, double x) { return v.time_s < x; });
  if (it == s.end()) return s.back().value;
  if (it->time_s == t || it == s.begin()) return it->value;
  const auto& a = *std::prev(it);
  const double w = (t - a.time_s) / (it->time_s - a.time_s);
  return a.value + w * (it->value - a.value);
}

void require_sorted(std::span<const TimedValue> s, const char* what) {
  if (s.empty()) throw EmptyInputError(std::string(what) + " series is empty");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!(s[i].time_s > s[i - 1].time_s))
      throw ArgumentError(std::string(what) + " series must be strictly increasing in time");
}

}  // namespace

AlignedSeries align_to_grid(std::span<const TimedValue> coverage, std::span<const TimedValue> expert,
                            double offset_s, double step_s) {
  if (!(step_s > 0.0)) throw ArgumentError("step_s must be positive");
  require_sorted(coverage, "coverage");
  require_sorted(expert, "expert");
  std::vector<TimedValue> shifted(expert.begin(), expert.end());
  for (auto& e : shifted) e.time_s += offset_s;

  const double lo = std::max(coverage.front().time_s, shifted.front().time_s);
  const double hi = std::min(coverage.back().time_s, shifted.back().time_s);
  AlignedSeries out;
  const double first = std::ceil(lo / step_s) * step_s;
  for (long k = 0;; ++k) {
    const double t = first + double(k) * step_s;
    if (t > hi + 1e-9) break;
    out.time_s.push_back(t);
    out.coverage.push_back(interpolate(coverage, t));
    out.expert.push_back(interpolate(shifted, t));
  }
  return out;
}

metrics::SpearmanResult compare_with_expert(const CoverageSeries& tm, std::span<const TimedValue> expert,
                                            double offset_s) {
  std::vector<TimedValue> cov;
  cov.reserve(tm.values.size());
  for (std::size_t i = 0; i < tm.values.size(); ++i) cov.push_back({tm.start_times_s[i], tm.values[i]});
  const auto aligned = align_to_grid(cov, expert, offset_s);
  return metrics::spearman(
      Eigen::Map<const Eigen::ArrayXd>(aligned.coverage.data(), static_cast<Eigen::Index>(aligned.coverage.size())),
      Eigen::Map<const Eigen::ArrayXd>(aligned.expert.data(), static_cast<Eigen::Index>(aligned.expert.size())));
}

}  // namespace sgf::coverage
