#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sgf/common/time.hpp"
#include "sgf/datastore/store.hpp"

namespace sgf::api {

struct TaskResponse {
  std::string image_id;
  std::string image_url;
  Instant sampled_at{};
};

struct LeaderboardEntry {
  std::string annotator;
  std::size_t count = 0;
  std::size_t rank = 1;
};

// Descending by count, ties ordered by name and sharing a rank (1, 1, 3).
std::vector<LeaderboardEntry> rank_leaderboard(const std::map<std::string, std::size_t>& counts);

struct ServiceOptions {
  std::set<std::string> excluded_images;  // e.g. frames above sea level
  // Restrict sampling to images with fewer than campaign_target annotations.
  bool campaign_mode = false;
  std::size_t campaign_target = 2;
  std::uint64_t seed = 0;
  std::string image_url_prefix = "/api/images/";
};

struct SubmitResult {
  AnnotationAck ack;
  std::string user;
};

// Name-only identity: user names are trimmed and lower-cased.
class AnnotationService {
 public:
  AnnotationService(AnnotationStore& store, ServiceOptions options = {});

  static std::string normalize_user(std::string_view name);

  // Uniform over the active pool, never repeating the user's previous image
  // while another one is available. nullopt when the pool is empty.
  // Throws ArgumentError for an empty user name.
  std::optional<TaskResponse> next_task(std::string_view user);

  // Throws ArgumentError for an empty user or unknown label text,
  // ValidationError for rule violations, NotFoundError for unknown images.
  SubmitResult submit(std::string_view user, const std::string& image_id, std::string_view label,
                      std::optional<std::string> comment, const std::string& request_id);

  // Throws EmptyHistoryError.
  AnnotationRecord undo(std::string_view user);

  std::vector<LeaderboardEntry> leaderboard() const;
  // True when cached leaderboard counts equal counts derived from the records.
  bool consistent() const;

  std::size_t pool_size() const;
  AnnotationStore& store() noexcept { return store_; }

 private:
  std::vector<const ImageEntry*> active_pool() const;

  AnnotationStore& store_;
  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::mt19937_64 rng_;
  std::unordered_map<std::string, std::string> last_served_;
};

nlohmann::json to_json(const TaskResponse& t);
nlohmann::json to_json(const LeaderboardEntry& e);

}  // namespace sgf::api
