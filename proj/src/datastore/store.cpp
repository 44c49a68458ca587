#include "sgf/datastore/store.hpp"

#include <unistd.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "sgf/common/csv.hpp"
#include "sgf/common/error.hpp"

namespace sgf {

using nlohmann::json;

ImageRegistry ImageRegistry::from_manifest(const std::vector<ManifestEntry>& manifest) {
  ImageRegistry r;
  for (const auto& e : manifest) r.add({e.image_id, e.transect_id, e.file_path});
  return r;
}

void ImageRegistry::add(ImageEntry entry) {
  if (index_.contains(entry.image_id))
    throw ValidationError("duplicate image_id in registry: " + entry.image_id);
  index_.emplace(entry.image_id, entries_.size());
  entries_.push_back(std::move(entry));
}

bool ImageRegistry::contains(std::string_view image_id) const {
  return index_.contains(std::string(image_id));
}

const ImageEntry* ImageRegistry::find(std::string_view image_id) const {
  auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

AnnotationStore::AnnotationStore(ImageRegistry images, StoreOptions options)
    : images_(std::move(images)), options_(std::move(options)) {
  if (!options_.log_path) return;
  const auto& path = *options_.log_path;
  if (std::filesystem::exists(path)) replay(path);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  log_ = std::fopen(path.c_str(), "ab");
  if (!log_) throw IoError("cannot open annotation log: " + path.string());
}

AnnotationStore::~AnnotationStore() {
  if (log_) std::fclose(log_);
}

bool AnnotationStore::counts_on_leaderboard(Label l) const {
  return l != Label::invalid || options_.leaderboard_counts_invalid;
}

void AnnotationStore::append_log(const std::string& line) {
  if (!log_) return;
  if (std::fputs(line.c_str(), log_) < 0 || std::fputc('\n', log_) == EOF ||
      std::fflush(log_) != 0)
    throw IoError("annotation log write failed");
  ::fsync(::fileno(log_));
}

AnnotationAck AnnotationStore::apply_annotate(AnnotationRecord record,
                                              const std::string& request_id,
                                              std::uint64_t seq) {
  if (record.annotation_id.empty()) record.annotation_id = "ann-" + std::to_string(seq);
  const bool counted = counts_on_leaderboard(record.label);
  ++image_counts_[record.image_id];
  history_[record.annotator].push_back(seq);
  if (counted) ++leaderboard_[record.annotator];
  if (!request_id.empty()) request_index_[request_id] = seq;
  next_seq_ = std::max(next_seq_, seq + 1);

  AnnotationAck ack{record.annotation_id, leaderboard_[record.annotator], false};
  if (!counted && leaderboard_[record.annotator] == 0) leaderboard_.erase(record.annotator);
  live_.emplace(seq, Entry{std::move(record), request_id});
  return ack;
}

AnnotationRecord AnnotationStore::apply_undo(const std::string& annotator) {
  auto hist = history_.find(annotator);
  if (hist == history_.end() || hist->second.empty())
    throw EmptyHistoryError("no annotation to undo for " + annotator);
  const std::uint64_t seq = hist->second.back();
  hist->second.pop_back();
  if (hist->second.empty()) history_.erase(hist);

  auto node = live_.extract(seq);
  Entry& e = node.mapped();
  if (--image_counts_[e.record.image_id] == 0) image_counts_.erase(e.record.image_id);
  if (counts_on_leaderboard(e.record.label)) {
    auto it = leaderboard_.find(annotator);
    if (--it->second == 0) leaderboard_.erase(it);
  }
  if (!e.request_id.empty()) request_index_.erase(e.request_id);
  return std::move(e.record);
}

AnnotationAck AnnotationStore::record_annotation(AnnotationRecord record,
                                                 const std::string& request_id) {
  validate(record);
  if (!images_.contains(record.image_id))
    throw NotFoundError("unknown image_id: " + record.image_id);

  std::lock_guard lock(mutex_);
  if (!request_id.empty()) {
    if (auto it = request_index_.find(request_id); it != request_index_.end()) {
      const auto& prior = live_.at(it->second).record;
      return {prior.annotation_id, leaderboard_count_unlocked(prior.annotator), true};
    }
  }
  const std::uint64_t seq = next_seq_;
  if (record.annotation_id.empty()) record.annotation_id = "ann-" + std::to_string(seq);
  append_log(json{{"event", "annotate"}, {"seq", seq}, {"request_id", request_id},
                  {"record", to_json(record)}}
                 .dump());
  return apply_annotate(std::move(record), request_id, seq);
}

AnnotationRecord AnnotationStore::undo_last(const std::string& annotator) {
  std::lock_guard lock(mutex_);
  auto hist = history_.find(annotator);
  if (hist == history_.end() || hist->second.empty())
    throw EmptyHistoryError("no annotation to undo for " + annotator);
  append_log(json{{"event", "undo"}, {"annotator", annotator}}.dump());
  return apply_undo(annotator);
}

void AnnotationStore::replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read annotation log: " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto event = j.at("event").get<std::string>();
      if (event == "annotate") {
        apply_annotate(annotation_from_json(j.at("record")), j.value("request_id", ""),
                       j.at("seq").get<std::uint64_t>());
      } else if (event == "undo") {
        apply_undo(j.at("annotator").get<std::string>());
      } else {
        throw FormatError("unknown event '" + event + "'");
      }
    } catch (const json::exception& ex) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + ex.what());
    } catch (const Error& ex) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + ex.what());
    }
  }
}

std::vector<AnnotationRecord> AnnotationStore::snapshot() const {
  std::lock_guard lock(mutex_);
  std::vector<AnnotationRecord> out;
  out.reserve(live_.size());
  for (const auto& [seq, e] : live_) out.push_back(e.record);
  return out;
}

std::size_t AnnotationStore::annotation_count(const std::string& image_id) const {
  std::lock_guard lock(mutex_);
  auto it = image_counts_.find(image_id);
  return it == image_counts_.end() ? 0 : it->second;
}

std::size_t AnnotationStore::leaderboard_count_unlocked(const std::string& annotator) const {
  auto it = leaderboard_.find(annotator);
  return it == leaderboard_.end() ? 0 : it->second;
}

std::size_t AnnotationStore::leaderboard_count(const std::string& annotator) const {
  std::lock_guard lock(mutex_);
  return leaderboard_count_unlocked(annotator);
}

std::map<std::string, std::size_t> AnnotationStore::leaderboard() const {
  std::lock_guard lock(mutex_);
  return leaderboard_;
}

std::map<std::string, std::size_t> AnnotationStore::recount_leaderboard() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : snapshot())
    if (counts_on_leaderboard(r.label)) ++counts[r.annotator];
  return counts;
}

void AnnotationStore::export_csv(std::ostream& out) const {
  write_annotations_csv(out, snapshot());
}

void write_annotations_csv(std::ostream& out, const std::vector<AnnotationRecord>& records) {
  csv::write_row(out, {"annotation_id", "image_id", "annotator", "label", "comment", "created_at"});
  for (const auto& r : records)
    csv::write_row(out, {r.annotation_id, r.image_id, r.annotator, std::string(to_string(r.label)),
                         r.comment.value_or(""), format_instant(r.created_at)});
}

std::vector<AnnotationRecord> read_annotations_csv(std::istream& in) {
  const auto t = csv::Table::parse(in);
  const auto c_id = t.column("annotation_id"), c_img = t.column("image_id"),
             c_who = t.column("annotator"), c_label = t.column("label"),
             c_comment = t.column("comment"), c_at = t.column("created_at");
  std::vector<AnnotationRecord> out;
  for (const auto& row : t.rows()) {
    if (row.size() < t.header().size()) throw FormatError("annotation csv: short row");
    AnnotationRecord r;
    r.annotation_id = row[c_id];
    r.image_id = row[c_img];
    r.annotator = row[c_who];
    const auto label = parse_label(row[c_label]);
    if (!label) throw FormatError("annotation csv: unknown label '" + row[c_label] + "'");
    r.label = *label;
    if (!row[c_comment].empty()) r.comment = row[c_comment];
    const auto at = parse_instant(row[c_at]);
    if (!at) throw FormatError("annotation csv: bad created_at '" + row[c_at] + "'");
    r.created_at = *at;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sgf
