#include <doctest.h>

#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "sgf/api/http.hpp"
#include "sgf/api/service.hpp"
#include "sgf/common/error.hpp"
#include "support/synthetic.hpp"

using namespace sgf;
using namespace sgf::api;
using nlohmann::json;

namespace {

ImageRegistry pool(int n, const std::filesystem::path& dir = {}) {
  ImageRegistry r;
  for (int i = 0; i < n; ++i) {
    const auto id = make_image_id("LYT-20", 6 * i);
    r.add({id, "LYT-20", dir.empty() ? "" : (id + ".png")});
  }
  return r;
}

// Pearson chi-square statistic against a uniform expectation.
double chi_square(const std::map<std::string, int>& counts, int categories, int draws) {
  const double expected = double(draws) / categories;
  double stat = 0;
  for (const auto& [k, c] : counts) stat += (c - expected) * (c - expected) / expected;
  stat += double(categories - int(counts.size())) * expected;
  return stat;
}
constexpr double kChi2Crit4Df = 13.2767;  // upper 1% point, 4 degrees of freedom

struct LiveServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  LiveServer(AnnotationService& service, HttpOptions options) {
    register_routes(server, service, options);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }
};

}  // namespace

TEST_CASE("leaderboard ranks share ties") {
  const auto board = rank_leaderboard({{"c", 1}, {"b", 3}, {"a", 3}});
  REQUIRE(board.size() == 3);
  CHECK(board[0].annotator == "a");
  CHECK(board[0].rank == 1);
  CHECK(board[1].annotator == "b");
  CHECK(board[1].rank == 1);
  CHECK(board[2].rank == 3);
  CHECK(rank_leaderboard({}).empty());
  CHECK(rank_leaderboard({{"solo", 4}})[0].rank == 1);
}

TEST_CASE("sampling: single image, no immediate repeats, uniform") {
  AnnotationStore one(pool(1));
  AnnotationService single(one);
  CHECK(single.next_task("ana")->image_id == "LYT-20_0");
  CHECK(single.next_task("ana")->image_id == "LYT-20_0");
  CHECK(single.next_task("ana")->image_url == "/api/images/LYT-20_0");
  CHECK_THROWS_AS(single.next_task("  "), ArgumentError);

  AnnotationStore five(pool(5));
  AnnotationService svc(five, {{}, false, 2, 1234});
  std::map<std::string, int> counts;
  std::string previous;
  for (int i = 0; i < 10000; ++i) {
    const auto id = svc.next_task("ana")->image_id;
    CHECK(id != previous);
    previous = id;
    ++counts[id];
  }
  CHECK(chi_square(counts, 5, 10000) < kChi2Crit4Df);

  // Fresh users: one draw each from the full pool.
  std::map<std::string, int> fresh;
  for (int i = 0; i < 10000; ++i) ++fresh[svc.next_task("user" + std::to_string(i))->image_id];
  CHECK(chi_square(fresh, 5, 10000) < kChi2Crit4Df);

  AnnotationStore empty(ImageRegistry{});
  CHECK_FALSE(AnnotationService(empty).next_task("ana").has_value());
}

TEST_CASE("excluded images are never served and campaign mode narrows the pool") {
  AnnotationStore store(pool(6));
  AnnotationService svc(store, {{"LYT-20_0", "LYT-20_6"}, false, 2, 7});
  CHECK(svc.pool_size() == 4);
  for (int i = 0; i < 2000; ++i) {
    const auto id = svc.next_task("u" + std::to_string(i % 3))->image_id;
    CHECK(id != "LYT-20_0");
    CHECK(id != "LYT-20_6");
  }

  AnnotationStore cstore(pool(3));
  AnnotationService campaign(cstore, {{}, true, 2, 7});
  for (auto u : {"a", "b"}) campaign.submit(u, "LYT-20_0", "present", std::nullopt, "");
  CHECK(campaign.pool_size() == 2);
  for (int i = 0; i < 200; ++i) CHECK(campaign.next_task("c")->image_id != "LYT-20_0");
}

TEST_CASE("submit, undo and consistency through the service") {
  AnnotationStore store(pool(4));
  AnnotationService svc(store);
  CHECK(svc.submit(" Ana ", "LYT-20_0", "present", std::nullopt, "r1").ack.annotator_count == 1);
  CHECK(svc.submit("ana", "LYT-20_6", "skip", std::nullopt, "r2").ack.annotator_count == 2);
  CHECK(svc.submit("ANA", "LYT-20_6", "skip", std::nullopt, "r2").ack.duplicate);
  CHECK_THROWS_AS(svc.submit("ana", "LYT-20_0", "maybe", std::nullopt, ""), ArgumentError);
  CHECK_THROWS_AS(svc.submit("ana", "LYT-20_0", "invalid", std::nullopt, ""), ValidationError);
  CHECK_THROWS_AS(svc.submit("ana", "nope", "present", std::nullopt, ""), NotFoundError);
  const auto stored = svc.submit("ana", "LYT-20_12", "invalid", std::string("lens fouled"), "");
  CHECK(store.snapshot().back().comment == "lens fouled");
  CHECK(stored.ack.annotator_count == 2);
  CHECK(svc.leaderboard()[0].count == 2);
  svc.undo("ana");
  svc.undo("ana");
  CHECK(svc.leaderboard()[0].count == 1);
  CHECK(svc.consistent());
  svc.undo("ana");
  CHECK(svc.leaderboard().empty());
  CHECK_THROWS_AS(svc.undo("ana"), EmptyHistoryError);
}

TEST_CASE("HTTP endpoints") {
  testing::TempDir dir("http");
  const cv::Mat img = testing::texture_image(1, 1);
  for (int i = 0; i < 3; ++i) cv::imwrite((dir / (make_image_id("LYT-20", 6 * i) + ".png")).string(), img);
  AnnotationStore store(pool(3, dir.path()));
  AnnotationService svc(store, {{}, false, 2, 3});
  LiveServer live(svc, {dir.path()});
  auto cli = live.client();

  auto res = cli.Get("/api/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body).at("ok") == true);

  res = cli.Get("/api/next?user=ana");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto task = json::parse(res->body);
  const auto image_id = task.at("image_id").get<std::string>();
  CHECK(task.at("image_url") == "/api/images/" + image_id);
  CHECK(task.contains("sampled_at"));
  CHECK(cli.Get("/api/next")->status == 400);

  res = cli.Get(task.at("image_url").get<std::string>());
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "image/png");
  CHECK(res->body.size() == std::filesystem::file_size(dir / (image_id + ".png")));
  CHECK(cli.Get("/api/images/unknown")->status == 404);

  const auto post = [&](const std::string& path, const json& body) {
    return cli.Post(path, body.dump(), "application/json");
  };
  res = post("/api/annotations", {{"user", "ana"}, {"image_id", image_id}, {"label", "present"}, {"request_id", "q1"}});
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = json::parse(res->body);
  CHECK(body.at("ok") == true);
  CHECK(body.at("count") == 1);
  res = post("/api/annotations", {{"user", "ana"}, {"image_id", image_id}, {"label", "present"}, {"request_id", "q1"}});
  CHECK(json::parse(res->body).at("duplicate") == true);
  CHECK(json::parse(res->body).at("count") == 1);

  CHECK(post("/api/annotations", {{"user", "ana"}, {"image_id", image_id}, {"label", "maybe"}, {"request_id", "q2"}})->status == 400);
  CHECK(post("/api/annotations", {{"user", "ana"}, {"image_id", "nope"}, {"label", "absent"}, {"request_id", "q3"}})->status == 404);
  CHECK(post("/api/annotations", {{"user", "ana"}, {"image_id", image_id}, {"label", "invalid"}, {"request_id", "q4"}})->status == 400);
  CHECK(cli.Post("/api/annotations", "{not json", "application/json")->status == 400);
  res = post("/api/annotations", {{"user", "ben"}, {"image_id", image_id}, {"label", "invalid"},
                                  {"comment", "lens fouled"}, {"request_id", "q5"}});
  CHECK(res->status == 200);

  res = cli.Get("/api/leaderboard");
  const auto board = json::parse(res->body);
  REQUIRE(board.size() == 1);  // ben's invalid label does not count
  CHECK(board[0].at("annotator") == "ana");
  CHECK(board[0].at("rank") == 1);

  res = cli.Get("/api/export");
  CHECK(res->status == 200);
  CHECK(res->body.find("lens fouled") != std::string::npos);
  CHECK(json::parse(cli.Get("/api/consistency")->body).at("consistent") == true);

  res = post("/api/annotations/undo", {{"user", "ana"}});
  CHECK(res->status == 200);
  CHECK(json::parse(res->body).at("image_id") == image_id);
  CHECK(json::parse(res->body).at("count") == 0);
  CHECK(post("/api/annotations/undo", {{"user", "ana"}})->status == 409);
  CHECK(json::parse(cli.Get("/api/leaderboard")->body).empty());

  // Empty pool answers 204.
  AnnotationStore none(ImageRegistry{});
  AnnotationService empty_svc(none);
  LiveServer empty_live(empty_svc, {});
  CHECK(empty_live.client().Get("/api/next?user=ana")->status == 204);
}

TEST_CASE("concurrent undo requests succeed once per prior annotation") {
  AnnotationStore store(pool(3));
  AnnotationService svc(store);
  LiveServer live(svc, {});
  constexpr int kPrior = 6;
  for (int i = 0; i < kPrior; ++i) svc.submit("ana", "LYT-20_0", "present", std::nullopt, "");
  std::atomic<int> ok{0}, conflict{0}, other{0};
  std::vector<std::thread> clients;
  for (int c = 0; c < 2; ++c)
    clients.emplace_back([&] {
      auto cli = live.client();
      for (int i = 0; i < kPrior; ++i) {
        auto res = cli.Post("/api/annotations/undo", R"({"user":"ana"})", "application/json");
        if (res && res->status == 200) ++ok;
        else if (res && res->status == 409) ++conflict;
        else ++other;
      }
    });
  for (auto& t : clients) t.join();
  CHECK(ok == kPrior);
  CHECK(conflict == kPrior);
  CHECK(other == 0);
  CHECK(store.snapshot().empty());
  CHECK(svc.consistent());
}

TEST_CASE("labelling session as a browser client drives it: five labels, one undo") {
  AnnotationStore store(pool(8));
  AnnotationService svc(store, {{}, false, 2, 11});
  LiveServer live(svc, {});
  auto cli = live.client();
  svc.submit("ben", "LYT-20_0", "absent", std::nullopt, "b1");

  const char* labels[] = {"present", "absent", "skip", "present", "absent"};
  int count = 0;
  for (int i = 0; i < 5; ++i) {
    const auto task = json::parse(cli.Get("/api/next?user=Cleo")->body);
    const json body{{"user", "Cleo"}, {"image_id", task.at("image_id")}, {"label", labels[i]},
                    {"request_id", "c" + std::to_string(i)}};
    auto res = cli.Post("/api/annotations", body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    // A double click resends the same request id.
    res = cli.Post("/api/annotations", body.dump(), "application/json");
    CHECK(json::parse(res->body).at("duplicate") == true);
    count = json::parse(res->body).at("count");
  }
  CHECK(count == 5);
  CHECK(cli.Post("/api/annotations/undo", R"({"user":"Cleo"})", "application/json")->status == 200);

  std::istringstream exported(cli.Get("/api/export")->body);
  const auto rows = read_annotations_csv(exported);
  CHECK(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.annotator == "cleo"; }) == 4);
  CHECK(rows.size() == 5);
  const auto board = json::parse(cli.Get("/api/leaderboard")->body);
  REQUIRE(board.size() == 2);
  CHECK(board[0].at("annotator") == "cleo");
  CHECK(board[0].at("count") == 4);
  CHECK(board[1].at("annotator") == "ben");
}
