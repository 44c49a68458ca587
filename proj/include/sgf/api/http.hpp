#pragma once

#include <filesystem>
#include <string>

#include "sgf/api/service.hpp"

namespace httplib {
class Server;
}

namespace sgf::api {

struct HttpOptions {
  // Relative image paths in the registry resolve against this directory.
  std::filesystem::path image_root = ".";
};

// Routes:
//   GET  /api/health                 {ok}
//   GET  /api/next?user=<name>       TaskResponse, 204 when the pool is empty
//   POST /api/annotations            {user, image_id, label, comment?, request_id} -> {ok, count, annotation_id, duplicate}
//   POST /api/annotations/undo       {user} -> removed record, 409 when nothing to undo
//   GET  /api/leaderboard            [LeaderboardEntry]
//   GET  /api/images/<image_id>      image bytes
//   GET  /api/consistency            {consistent}
//   GET  /api/export                 annotations CSV
// Client errors map to 400 (malformed), 404 (unknown image) and 409 (empty history).
void register_routes(httplib::Server& server, AnnotationService& service, HttpOptions options = {});

}  // namespace sgf::api
