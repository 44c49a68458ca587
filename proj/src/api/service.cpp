#include "sgf/api/service.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "sgf/common/error.hpp"

namespace sgf::api {

std::vector<LeaderboardEntry> rank_leaderboard(const std::map<std::string, std::size_t>& counts) {
  std::vector<LeaderboardEntry> out;
  for (const auto& [name, count] : counts) out.push_back({name, count, 0});
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].rank = (i > 0 && out[i].count == out[i - 1].count) ? out[i - 1].rank : i + 1;
  return out;
}

AnnotationService::AnnotationService(AnnotationStore& store, ServiceOptions options)
    : store_(store), options_(std::move(options)), rng_(options_.seed) {}

std::string AnnotationService::normalize_user(std::string_view name) {
  const auto b = name.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = name.find_last_not_of(" \t\r\n");
  std::string out(name.substr(b, e - b + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<const ImageEntry*> AnnotationService::active_pool() const {
  std::vector<const ImageEntry*> pool;
  for (const auto& e : store_.images().entries()) {
    if (options_.excluded_images.count(e.image_id)) continue;
    if (options_.campaign_mode && store_.annotation_count(e.image_id) >= options_.campaign_target) continue;
    pool.push_back(&e);
  }
  return pool;
}

std::size_t AnnotationService::pool_size() const { return active_pool().size(); }

std::optional<TaskResponse> AnnotationService::next_task(std::string_view user) {
  const std::string name = normalize_user(user);
  if (name.empty()) throw ArgumentError("user name must not be empty");
  const auto pool = active_pool();
  if (pool.empty()) return std::nullopt;

  std::lock_guard lock(mutex_);
  const auto last = last_served_.find(name);
  const ImageEntry* pick = nullptr;
  if (pool.size() == 1) {
    pick = pool.front();
  } else {
    // Rejection keeps the draw uniform over the pool minus the previous image.
    std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
    do {
      pick = pool[dist(rng_)];
    } while (last != last_served_.end() && pick->image_id == last->second);
  }
  last_served_[name] = pick->image_id;
  return TaskResponse{pick->image_id, options_.image_url_prefix + pick->image_id, now_utc()};
}

SubmitResult AnnotationService::submit(std::string_view user, const std::string& image_id,
                                       std::string_view label, std::optional<std::string> comment,
                                       const std::string& request_id) {
  const std::string name = normalize_user(user);
  if (name.empty()) throw ArgumentError("user name must not be empty");
  const auto parsed = parse_label(label);
  if (!parsed) throw ArgumentError("unknown label: " + std::string(label));
  AnnotationRecord r;
  r.image_id = image_id;
  r.annotator = name;
  r.label = *parsed;
  if (comment && !comment->empty()) r.comment = std::move(comment);
  r.created_at = now_utc();
  return {store_.record_annotation(std::move(r), request_id), name};
}

AnnotationRecord AnnotationService::undo(std::string_view user) {
  const std::string name = normalize_user(user);
  if (name.empty()) throw ArgumentError("user name must not be empty");
  return store_.undo_last(name);
}

std::vector<LeaderboardEntry> AnnotationService::leaderboard() const {
  return rank_leaderboard(store_.leaderboard());
}

bool AnnotationService::consistent() const {
  return store_.leaderboard() == store_.recount_leaderboard();
}

nlohmann::json to_json(const TaskResponse& t) {
  return {{"image_id", t.image_id}, {"image_url", t.image_url}, {"sampled_at", format_instant(t.sampled_at)}};
}

nlohmann::json to_json(const LeaderboardEntry& e) {
  return {{"annotator", e.annotator}, {"count", e.count}, {"rank", e.rank}};
}

}  // namespace sgf::api
