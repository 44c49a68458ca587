#include "sgf/api/http.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sgf/common/error.hpp"

namespace sgf::api {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, {{"ok", false}, {"error", message}}, status);
}

// Runs a handler, translating toolkit errors into HTTP statuses.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const EmptyHistoryError& e) {
    send_error(res, 409, e.what());
  } catch (const NotFoundError& e) {
    send_error(res, 404, e.what());
  } catch (const ArgumentError& e) {
    send_error(res, 400, e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed request body: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body);
  if (!body.is_object()) throw ArgumentError("request body must be a JSON object");
  return body;
}

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

}  // namespace

void register_routes(httplib::Server& server, AnnotationService& service, HttpOptions options) {
  server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"ok", true}});
  });

  server.Get("/api/next", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto task = service.next_task(req.get_param_value("user"));
      if (!task) {
        res.status = 204;
        return;
      }
      send_json(res, to_json(*task));
    });
  });

  server.Post("/api/annotations", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      std::optional<std::string> comment;
      if (body.contains("comment") && !body["comment"].is_null()) comment = body["comment"].get<std::string>();
      const auto result =
          service.submit(body.at("user").get<std::string>(), body.at("image_id").get<std::string>(),
                         body.at("label").get<std::string>(), std::move(comment),
                         body.value("request_id", std::string()));
      send_json(res, {{"ok", true},
                      {"count", result.ack.annotator_count},
                      {"annotation_id", result.ack.annotation_id},
                      {"duplicate", result.ack.duplicate}},
                200);
    });
  });

  server.Post("/api/annotations/undo", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const std::string user = body.at("user").get<std::string>();
      const auto removed = service.undo(user);
      json out = to_json(removed);
      out["ok"] = true;
      out["count"] = service.store().leaderboard_count(removed.annotator);
      send_json(res, out);
    });
  });

  server.Get("/api/leaderboard", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json out = json::array();
      for (const auto& e : service.leaderboard()) out.push_back(to_json(e));
      send_json(res, out);
    });
  });

  server.Get(R"(/api/images/([^/]+))", [&service, options](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const ImageEntry* entry = service.store().images().find(id);
      if (!entry) throw NotFoundError("unknown image_id: " + id);
      std::filesystem::path path = entry->file_path;
      if (path.is_relative()) path = options.image_root / path;
      std::ifstream in(path, std::ios::binary);
      if (!in) throw NotFoundError("image file missing for " + id);
      std::ostringstream bytes;
      bytes << in.rdbuf();
      res.set_content(bytes.str(), content_type_for(path));
    });
  });

  server.Get("/api/consistency", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, {{"consistent", service.consistent()}}); });
  });

  server.Get("/api/export", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      std::ostringstream out;
      service.store().export_csv(out);
      res.set_content(out.str(), "text/csv");
    });
  });
}

}  // namespace sgf::api
