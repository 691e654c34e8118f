#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "emcloud/scenario/runner.hpp"

namespace emcloud::gateway {

inline constexpr std::uint16_t kDefaultPort = 8080;
inline constexpr const char* kPortEnv = "EMCLOUD_PORT";

/// Port from EMCLOUD_PORT, or `fallback` when unset. Throws
/// std::invalid_argument for a value that is not a port number.
std::uint16_t port_from_env(std::uint16_t fallback = kDefaultPort);

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Decodes %XX escapes and '+' in a URL component.
std::string url_decode(std::string_view s);

/// Query-string pairs in order; repeated keys are kept.
std::vector<std::pair<std::string, std::string>> parse_query(std::string_view query);

/// Answers one HTTP request against the engine. Transport independent:
/// the server calls it for every non-WebSocket request.
///
///   GET  /state/processes   GET /state/inventory   GET /proposals
///   GET  /decision-points   GET /metrics           GET /clock
///   GET  /history?from=&to=&etype=&where=          (canonical lines)
///   POST /choices  {"point": .., "option": .., "chooser": ..}
HttpResponse handle_request(scenario::Runner& runner, std::string_view method, std::string_view target,
                            std::string_view body);

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = kDefaultPort;  // 0 picks a free port
  int threads = 2;
};

/// HTTP and WebSocket front end for one running scenario.
///
/// WS /stream?pattern=<url-encoded pattern JSON> delivers every matching
/// event published after the session opened, one canonical line per text
/// frame. Closing a session removes its subscription.
class Server {
 public:
  Server(scenario::Runner& runner, ServerOptions options = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts serving. Throws PortInUse when the port is taken.
  void start();
  void stop();

  std::uint16_t port() const;
  std::size_t session_count() const;

  struct Impl;  // transport state, defined in the implementation

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace emcloud::gateway
