#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "httplib.h"
#include "json.hpp"

#include "emcloud/errors.hpp"
#include "emcloud/gateway/server.hpp"
#include "emcloud/pattern.hpp"
#include "emcloud/scenario/metrics.hpp"
#include "emcloud/scenario/runner.hpp"
#include "support/oracles.hpp"

using namespace emcloud;
using namespace emcloud::scenario;
using namespace std::chrono_literals;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace ws = boost::beast::websocket;
using json = nlohmann::json;

namespace {

std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

// Minimal stream client: reads frames on its own io thread.
class StreamClient {
 public:
  StreamClient(std::uint16_t port, const Pattern& pattern) : ws_(ioc_) {
    net::ip::tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1:" + std::to_string(port), "/stream?pattern=" + url_encode(encode_pattern(pattern)));
    read();
    io_ = std::thread([this] { ioc_.run(); });
  }

  ~StreamClient() {
    close();
    if (io_.joinable()) io_.join();
  }

  void close() {
    net::post(ioc_, [this] {
      if (ws_.is_open()) ws_.async_close(ws::close_code::normal, [](beast::error_code) {});
    });
  }

  std::vector<std::string> lines() {
    std::lock_guard lk(mu_);
    return {frames_.begin(), frames_.end()};
  }

  bool wait_for(std::size_t n, std::chrono::milliseconds limit = 5000ms) {
    auto until = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < until) {
      {
        std::lock_guard lk(mu_);
        if (frames_.size() >= n) return true;
      }
      std::this_thread::sleep_for(2ms);
    }
    return false;
  }

 private:
  void read() {
    ws_.async_read(buf_, [this](beast::error_code ec, std::size_t) {
      if (ec) return;
      {
        std::lock_guard lk(mu_);
        frames_.push_back(beast::buffers_to_string(buf_.data()));
      }
      buf_.consume(buf_.size());
      read();
    });
  }

  net::io_context ioc_;
  ws::stream<net::ip::tcp::socket> ws_;
  beast::flat_buffer buf_;
  std::thread io_;
  std::mutex mu_;
  std::deque<std::string> frames_;
};

ScenarioScript first_forty() {
  return oracle::truncate(load_scenario_file(resolve_scenario("nuclear")), SimTime{40min});
}

std::string pick(const json& point) {
  if (point["point"] == "situation-analysis") return "ask-advice";
  return point["options"][0]["id"].get<std::string>();
}

bool wait_until(const std::function<bool()>& cond, std::chrono::milliseconds limit = 5000ms) {
  auto until = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < until) {
    if (cond()) return true;
    std::this_thread::sleep_for(2ms);
  }
  return cond();
}

}  // namespace

TEST(Api, UrlHelpers) {
  EXPECT_EQ(gateway::url_decode("a%20b+c%7B"), "a b c{");
  auto q = gateway::parse_query("etype=A&etype=B&from=0&flag");
  ASSERT_EQ(q.size(), 4u);
  EXPECT_EQ(q[1].second, "B");
  EXPECT_EQ(q[3].first, "flag");
}

TEST(Api, PortFromEnv) {
  ::unsetenv("EMCLOUD_PORT");
  EXPECT_EQ(gateway::port_from_env(), 8080);
  ::setenv("EMCLOUD_PORT", "9123", 1);
  EXPECT_EQ(gateway::port_from_env(), 9123);
  ::setenv("EMCLOUD_PORT", "nope", 1);
  EXPECT_THROW(gateway::port_from_env(), std::invalid_argument);
  ::unsetenv("EMCLOUD_PORT");
}

TEST(Api, RoutesWithoutTransport) {
  ScriptedDecisions d;
  Runner r(first_forty(), d);
  EXPECT_EQ(gateway::handle_request(r, "GET", "/state/processes", "").status, 200);
  EXPECT_EQ(gateway::handle_request(r, "GET", "/nowhere", "").status, 404);
  EXPECT_EQ(gateway::handle_request(r, "OPTIONS", "/choices", "").status, 204);
  EXPECT_EQ(gateway::handle_request(r, "POST", "/choices", "not json").status, 400);
  auto unknown = gateway::handle_request(r, "POST", "/choices", R"({"point":"ghost","option":"x"})");
  EXPECT_EQ(unknown.status, 404);
  EXPECT_EQ(json::parse(unknown.body)["error"], "UnknownPoint");
  r.run();
  auto h = gateway::handle_request(r, "GET", "/history?etype=RadiationMeasure&from=0&to=300000", "");
  EXPECT_EQ(h.content_type, "application/x-ndjson");
  EXPECT_EQ(std::count(h.body.begin(), h.body.end(), '\n'), 50);
  auto bad = gateway::handle_request(r, "GET", "/history?from=10&to=5", "");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(json::parse(bad.body)["error"], "InvalidRange");
  EXPECT_EQ(gateway::handle_request(r, "GET", "/history?where=value", "").status, 400);
  auto where = gateway::handle_request(r, "GET", "/history?etype=CirculationPlan&where=roads_closed%3D%3D8", "");
  EXPECT_EQ(std::count(where.body.begin(), where.body.end(), '\n'), 1);
  auto inv = json::parse(gateway::handle_request(r, "GET", "/state/inventory", "").body);
  EXPECT_EQ(inv["inventory"]["vehicle"]["committed"], 3);
  auto clock = json::parse(gateway::handle_request(r, "GET", "/clock", "").body);
  EXPECT_EQ(clock["now"], 2400000);
  EXPECT_EQ(clock["finished"], true);
}

TEST(Server, PortInUse) {
  ScriptedDecisions d;
  Runner r(first_forty(), d);
  gateway::Server a(r, {"127.0.0.1", 0, 1});
  a.start();
  gateway::Server b(r, {"127.0.0.1", a.port(), 1});
  EXPECT_THROW(b.start(), PortInUse);
  a.stop();
}

TEST(Server, BadStreamPatternIsRejected) {
  ScriptedDecisions d;
  Runner r(first_forty(), d);
  gateway::Server s(r, {"127.0.0.1", 0, 1});
  s.start();
  net::io_context ioc;
  ws::stream<net::ip::tcp::socket> c(ioc);
  net::ip::tcp::resolver resolver(ioc);
  net::connect(c.next_layer(), resolver.resolve("127.0.0.1", std::to_string(s.port())));
  EXPECT_ANY_THROW(c.handshake("127.0.0.1", "/stream?pattern=" + url_encode("{\"etype\":")));
  s.stop();
}

// An operator drives the first 40 minutes through HTTP while three stream
// sessions watch.
TEST(Server, InteractiveRunEndToEnd) {
  auto script = first_forty();
  ExternalDecisions ext;
  Runner runner(script, ext);
  gateway::Server server(runner, {"127.0.0.1", 0, 2});
  server.start();
  const auto port = server.port();
  const auto base_subs = runner.broker().subscription_count();

  auto all = std::make_unique<StreamClient>(port, Pattern{});
  auto rsn = std::make_unique<StreamClient>(port, Pattern::of_type("AlertRSN"));
  auto mf = std::make_unique<StreamClient>(port, Pattern::of_type("AlertMF"));
  ASSERT_TRUE(wait_until([&] { return server.session_count() == 3; }));

  RunLog log;
  std::thread driver([&] { log = runner.run(); });

  httplib::Client http("127.0.0.1", port);
  http.set_read_timeout(35, 0);
  int decided = 0, conflicts = 0, unknown = 0;
  while (!runner.finished()) {
    auto clock = http.Get("/clock");
    ASSERT_TRUE(clock);
    auto c = json::parse(clock->body);
    if (!c["paused"].get<bool>()) {
      std::this_thread::sleep_for(1ms);
      continue;
    }
    auto pts = json::parse(http.Get("/decision-points")->body);
    for (const auto& p : pts) {
      if (!p["decided"].is_null() || p["due_ts"] != c["now"]) continue;
      json body = {{"point", p["point"]}, {"option", "not-an-option"}, {"chooser", "console-prefet"}};
      auto bad = http.Post("/choices", body.dump(), "application/json");
      unknown += bad->status == 404;
      body["option"] = pick(p);
      auto ok = http.Post("/choices", body.dump(), "application/json");
      ASSERT_EQ(ok->status, 200) << ok->body;
      auto ack = json::parse(ok->body);
      EXPECT_GT(ack["ack"].get<std::uint64_t>(), 0u);
      ++decided;
      auto again = http.Post("/choices", body.dump(), "application/json");
      conflicts += again->status == 409;
      break;
    }
  }
  driver.join();
  EXPECT_EQ(decided, 7);
  EXPECT_EQ(conflicts, 7);
  EXPECT_EQ(unknown, 7);

  // Same milestones as the scripted run.
  ScriptedDecisions sd;
  auto scripted = scenario::run(script, sd);
  auto mi = metrics(log.events, script), ms = metrics(scripted.events, script);
  EXPECT_TRUE(mi.all_pass()) << milestone_table(mi);
  for (std::size_t i = 0; i < ms.milestones.size(); ++i) EXPECT_EQ(mi.milestones[i].actual, ms.milestones[i].actual);
  for (const auto& e : log.events) {
    if (e.etype == "DecisionChoice") EXPECT_EQ(*e.text("chooser"), "console-prefet");
  }

  // The empty-pattern session saw exactly the log.
  ASSERT_TRUE(all->wait_for(log.events.size()));
  auto got = all->lines();
  std::vector<std::string> want;
  for (const auto& e : log.events) want.push_back(encode_event(e));
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  EXPECT_EQ(got, want);

  // Disjoint patterns only see their own type.
  ASSERT_TRUE(rsn->wait_for(1));
  ASSERT_TRUE(mf->wait_for(1));
  for (const auto& l : rsn->lines()) EXPECT_EQ(decode_event(l).etype, "AlertRSN");
  for (const auto& l : mf->lines()) EXPECT_EQ(decode_event(l).etype, "AlertMF");
  EXPECT_EQ(decode_event(rsn->lines().front()).ts, SimTime{7min});

  auto hist = http.Get("/history?etype=RadiationMeasure&from=0&to=300000");
  EXPECT_EQ(std::count(hist->body.begin(), hist->body.end(), '\n'), 50);
  EXPECT_EQ(http.Get("/metrics")->status, 200);
  EXPECT_EQ(http.Get("/proposals")->status, 200);

  // Closing sessions drops their subscriptions.
  all.reset();
  rsn.reset();
  mf.reset();
  EXPECT_TRUE(wait_until([&] { return server.session_count() == 0; }));
  EXPECT_EQ(runner.broker().subscription_count(), base_subs);
  server.stop();
}

TEST(Server, ChoiceAfterAbortIsRefused) {
  ExternalDecisions ext;
  Runner runner(first_forty(), ext);
  gateway::Server server(runner, {"127.0.0.1", 0, 2});
  server.start();
  std::thread driver([&] {
    try {
      runner.run();
    } catch (const AbortedByOperator&) {
    }
  });
  ASSERT_TRUE(wait_until([&] { return runner.paused(); }));
  runner.abort();
  runner.board().close();
  driver.join();
  httplib::Client http("127.0.0.1", server.port());
  auto pts = json::parse(http.Get("/decision-points")->body);
  ASSERT_FALSE(pts.empty());
  json body = {{"point", pts[0]["point"]}, {"option", pts[0]["options"][0]["id"]}};
  auto r = http.Post("/choices", body.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 503);
  server.stop();
}
