#include "sgf/coverage/predictions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "sgf/common/csv.hpp"
#include "sgf/common/error.hpp"

namespace sgf::coverage {
namespace {

nlohmann::json geo_json(const GeoFix& g) {
  nlohmann::json j{{"lat", g.latitude}, {"lon", g.longitude}};
  j["depth_m"] = g.depth_m ? nlohmann::json(*g.depth_m) : nlohmann::json(nullptr);
  j["heading_deg"] = g.heading_deg ? nlohmann::json(*g.heading_deg) : nlohmann::json(nullptr);
  j["timestamp_utc"] = g.timestamp_utc ? nlohmann::json(format_instant(*g.timestamp_utc)) : nlohmann::json(nullptr);
  return j;
}

template <typename T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

GeoFix geo_from_json(const nlohmann::json& j) {
  std::optional<Instant> stamp;
  if (auto s = opt<std::string>(j, "timestamp_utc")) {
    stamp = parse_instant(*s);
    if (!stamp) throw FormatError("bad timestamp_utc: " + *s);
  }
  return make_geofix(j.at("lat").get<double>(), j.at("lon").get<double>(), opt<double>(j, "depth_m"),
                     opt<double>(j, "heading_deg"), stamp);
}

}  // namespace

nlohmann::json to_json(const PredictionRecord& r) {
  nlohmann::json j{{"image_id", r.image_id},        {"transect_id", r.transect_id},
                   {"frame_index", r.frame_index},  {"video_time_s", r.video_time_s},
                   {"probability", r.probability},  {"binary", r.binary}};
  j["geo"] = r.geo ? geo_json(*r.geo) : nlohmann::json(nullptr);
  if (r.geo_join_dt_s) j["geo_join_dt_s"] = *r.geo_join_dt_s;
  return j;
}

PredictionRecord prediction_from_json(const nlohmann::json& j) {
  PredictionRecord r;
  try {
    r.image_id = j.at("image_id").get<std::string>();
    r.transect_id = j.at("transect_id").get<std::string>();
    r.frame_index = j.value("frame_index", std::int64_t{0});
    r.video_time_s = j.at("video_time_s").get<double>();
    r.probability = j.at("probability").get<double>();
    r.binary = j.at("binary").get<int>();
    if (j.contains("geo") && !j["geo"].is_null()) r.geo = geo_from_json(j["geo"]);
    r.geo_join_dt_s = opt<double>(j, "geo_join_dt_s");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad prediction record: ") + e.what());
  }
  if (!(r.probability >= 0.0 && r.probability <= 1.0)) throw FormatError("probability outside [0, 1]");
  if (r.binary != 0 && r.binary != 1) throw FormatError("binary must be 0 or 1");
  return r;
}

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_predictions(out, records);
}

std::vector<PredictionRecord> read_predictions(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingPrerequisiteError("predictions not found: " + path.string());
  return read_predictions(in);
}

void check_threshold_consistency(std::span<const PredictionRecord> records, double threshold) {
  for (const auto& r : records)
    if (r.binary != (r.probability >= threshold ? 1 : 0))
      throw ArgumentError("binary value of " + r.image_id + " disagrees with threshold");
}

StreamCheck stride_stream(double frames_per_second, int frame_stride,
                          std::span<const PredictionRecord> records) {
  if (!(frames_per_second > 0.0)) throw ArgumentError("frames_per_second must be positive");
  if (frame_stride < 1) throw ArgumentError("frame_stride must be >= 1");
  StreamCheck check;
  check.nominal_spacing_s = double(frame_stride) / frames_per_second;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double dt = records[i].video_time_s - records[i - 1].video_time_s;
    if (dt < 0.0) throw ArgumentError("predictions are not sorted by video_time_s");
    if (dt > 1.2 * check.nominal_spacing_s) check.gaps.push_back({i - 1, dt});
    else if (dt < 0.8 * check.nominal_spacing_s) check.short_steps.push_back({i - 1, dt});
  }
  return check;
}

CoverageSeries coverage_series(std::span<const PredictionRecord> records, int r,
                               double samples_per_second, bool use_probability) {
  if (r < 1) throw ArgumentError("window r must be >= 1");
  CoverageSeries s;
  s.window_r = r;
  s.samples_per_second = samples_per_second;
  if (!records.empty()) s.transect_id = records.front().transect_id;
  Eigen::ArrayXd p(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].transect_id != s.transect_id)
      throw ArgumentError("coverage stream mixes transects");
    p(static_cast<Eigen::Index>(i)) = use_probability ? records[i].probability : double(records[i].binary);
  }
  const Eigen::ArrayXd tm = temporal_mean(p, r);
  s.values.assign(tm.data(), tm.data() + tm.size());
  for (Eigen::Index i = 0; i < tm.size(); ++i) {
    s.start_indices.push_back(i);
    s.start_times_s.push_back(records[static_cast<std::size_t>(i)].video_time_s);
  }
  return s;
}

std::vector<std::vector<PredictionRecord>> split_by_transect(std::span<const PredictionRecord> records) {
  std::vector<std::vector<PredictionRecord>> groups;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : records) {
    auto [it, fresh] = slot.try_emplace(r.transect_id, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(r);
  }
  return groups;
}

void write_coverage_csv(std::ostream& out, std::span<const CoverageSeries> series) {
  csv::write_row(out, {"transect_id", "start_index", "video_time_s", "tm_value"});
  char num[64];
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      std::snprintf(num, sizeof num, "%.17g", s.values[i]);
      std::string value = num;
      std::snprintf(num, sizeof num, "%.6f", s.start_times_s[i]);
      csv::write_row(out, {s.transect_id, std::to_string(s.start_indices[i]), std::string(num), value});
    }
}

void write_coverage_csv(const std::filesystem::path& path, std::span<const CoverageSeries> series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_coverage_csv(out, series);
}

std::vector<PredictionRecord> fuse_geo(std::span<const PredictionRecord> records,
                                       const GeoFixTable& fixes, const GeoJoinOptions& options) {
  if (!(options.native_fps > 0.0)) throw ArgumentError("native_fps must be positive");
  std::vector<std::pair<double, const GeoFix*>> timeline;
  timeline.reserve(fixes.size());
  for (const auto& [frame, fix] : fixes) timeline.emplace_back(double(frame) / options.native_fps, &fix);

  std::vector<PredictionRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    r.geo.reset();
    r.geo_join_dt_s.reset();
    if (timeline.empty()) continue;
    const double t = r.video_time_s + options.time_offset_s;
    auto it = std::lower_bound(timeline.begin(), timeline.end(), t,
                               [](const auto& e, double v) { return e.first < v; });
    const std::pair<double, const GeoFix*>* best = nullptr;
    if (it != timeline.end()) best = &*it;
    if (it != timeline.begin()) {
      const auto& prev = *std::prev(it);
      if (!best || t - prev.first <= best->first - t) best = &prev;
    }
    const double dt = std::abs(best->first - t);
    if (dt > options.max_distance_s) continue;
    r.geo = options.sled_offset_m != 0.0 ? offset_along_track(*best->second, options.sled_offset_m)
                                         : *best->second;
    r.geo_join_dt_s = dt;
  }
  return out;
}

}  // namespace sgf::coverage
