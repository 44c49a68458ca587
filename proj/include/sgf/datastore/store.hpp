#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sgf/datastore/annotation.hpp"
#include "sgf/ingest/manifest.hpp"

namespace sgf {

struct ImageEntry {
  std::string image_id;
  std::string transect_id;
  std::string file_path;
};

// Known images, in registration order.
class ImageRegistry {
 public:
  ImageRegistry() = default;
  static ImageRegistry from_manifest(const std::vector<ManifestEntry>& manifest);

  void add(ImageEntry entry);
  bool contains(std::string_view image_id) const;
  const ImageEntry* find(std::string_view image_id) const;
  const std::vector<ImageEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<ImageEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct StoreOptions {
  // Append-only JSON Lines event log; replayed on construction when present.
  std::optional<std::filesystem::path> log_path;
  bool leaderboard_counts_invalid = false;
};

struct AnnotationAck {
  std::string annotation_id;
  std::size_t annotator_count = 0;  // leaderboard count after the write
  bool duplicate = false;           // request_id seen before; nothing stored
};

// Annotation event store. All public members are safe to call concurrently;
// writes are serialized, so record/undo are linearizable.
class AnnotationStore {
 public:
  explicit AnnotationStore(ImageRegistry images, StoreOptions options = {});
  ~AnnotationStore();
  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  // Throws NotFoundError for unknown images and ValidationError for records
  // violating the label rules. A non-empty request_id seen before returns the
  // original acknowledgment flagged as duplicate.
  AnnotationAck record_annotation(AnnotationRecord record, const std::string& request_id = {});

  // Removes the annotator's most recent annotation. Throws EmptyHistoryError.
  AnnotationRecord undo_last(const std::string& annotator);

  // Live annotations in insertion order.
  std::vector<AnnotationRecord> snapshot() const;

  std::size_t annotation_count(const std::string& image_id) const;
  std::size_t leaderboard_count(const std::string& annotator) const;
  std::map<std::string, std::size_t> leaderboard() const;
  // Same counts derived from scratch out of the live annotations.
  std::map<std::string, std::size_t> recount_leaderboard() const;

  bool counts_on_leaderboard(Label l) const;
  const ImageRegistry& images() const noexcept { return images_; }

  // CSV: annotation_id,image_id,annotator,label,comment,created_at
  void export_csv(std::ostream& out) const;

 private:
  struct Entry {
    AnnotationRecord record;
    std::string request_id;
  };

  AnnotationAck apply_annotate(AnnotationRecord record, const std::string& request_id,
                               std::uint64_t seq);
  AnnotationRecord apply_undo(const std::string& annotator);
  std::size_t leaderboard_count_unlocked(const std::string& annotator) const;
  void append_log(const std::string& line);
  void replay(const std::filesystem::path& path);

  ImageRegistry images_;
  StoreOptions options_;
  mutable std::mutex mutex_;
  std::map<std::uint64_t, Entry> live_;
  std::unordered_map<std::string, std::vector<std::uint64_t>> history_;
  std::unordered_map<std::string, std::uint64_t> request_index_;
  std::unordered_map<std::string, std::size_t> image_counts_;
  std::map<std::string, std::size_t> leaderboard_;
  std::uint64_t next_seq_ = 1;
  std::FILE* log_ = nullptr;
};

void write_annotations_csv(std::ostream& out, const std::vector<AnnotationRecord>& records);
std::vector<AnnotationRecord> read_annotations_csv(std::istream& in);

}  // namespace sgf
