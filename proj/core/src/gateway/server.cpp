#include "emcloud/gateway/server.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <optional>
#include <thread>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "emcloud/errors.hpp"
#include "emcloud/pattern.hpp"

namespace emcloud::gateway {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr auto kHttpIdleTimeout = std::chrono::seconds(60);

}  // namespace

struct Server::Impl {
  Impl(scenario::Runner& r, ServerOptions o) : runner(r), options(std::move(o)) {}

  scenario::Runner& runner;
  ServerOptions options;
  net::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::vector<std::thread> threads;
  std::atomic<std::size_t> sessions{0};
  std::uint16_t bound_port = 0;
  bool running = false;

  std::mutex helpers_mu;
  std::vector<std::thread> helpers;  // blocking POST /choices waits

  void do_accept();
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, Server::Impl& impl, Pattern pattern)
      : ws_(std::move(socket)), impl_(impl), pattern_(std::move(pattern)) {}

  ~WsSession() { cleanup(); }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    ++impl_.sessions;
    counted_ = true;
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto exec = ws_.get_executor();
    subscription_ = impl_.runner.broker().subscribe(pattern_, [weak, exec](const Event& e) {
      if (weak.expired()) return;
      net::post(exec, [weak, line = encode_event(e)]() mutable {
        if (auto self = weak.lock()) self->enqueue(std::move(line));
      });
    });
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      cleanup();
      return;
    }
    buffer_.consume(buffer_.size());  // client frames carry nothing
    do_read();
  }

  void enqueue(std::string line) {
    if (closed_) return;
    queue_.push_back(std::move(line));
    if (!writing_) do_write();
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      cleanup();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
      do_write();
    } else {
      writing_ = false;
    }
  }

  void cleanup() {
    if (closed_) return;
    closed_ = true;
    queue_.clear();
    if (subscription_) {
      try {
        impl_.runner.broker().unsubscribe(*subscription_);
      } catch (const UnknownSubscription&) {
      }
      subscription_.reset();
    }
    if (counted_) --impl_.sessions;
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl& impl_;
  Pattern pattern_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::optional<SubscriptionId> subscription_;
  bool writing_ = false;
  bool closed_ = false;
  bool counted_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Server::Impl& impl) : stream_(std::move(socket)), impl_(impl) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(kHttpIdleTimeout);
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      close();
      return;
    }
    if (ec) return;

    const std::string target(req_.target());
    const auto qmark = target.find('?');
    const std::string path = target.substr(0, qmark);

    if (websocket::is_upgrade(req_)) {
      if (path != "/stream") {
        respond({404, "application/json", R"({"error":"NotFound","message":"no stream at )" + path + "\"}"});
        return;
      }
      Pattern pattern;
      try {
        if (qmark != std::string::npos) {
          for (const auto& [k, v] : parse_query(std::string_view(target).substr(qmark + 1))) {
            if (k == "pattern" && !v.empty()) pattern = decode_pattern(v);
          }
        }
      } catch (const Error&) {
        respond({400, "application/json", R"({"error":"InvalidPattern","message":"bad stream pattern"})"});
        return;
      }
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), impl_, std::move(pattern))->run(std::move(req_));
      return;
    }

    const std::string method(req_.method_string());
    if (method == "POST" && path == "/choices") {
      // Waiting for the driver to record the choice blocks; keep it off the I/O threads.
      auto self = shared_from_this();
      std::string body = req_.body();
      std::lock_guard lock(impl_.helpers_mu);
      impl_.helpers.emplace_back([self, method, target, body = std::move(body)] {
        auto res = handle_request(self->impl_.runner, method, target, body);
        net::post(self->stream_.get_executor(), [self, res = std::move(res)]() mutable { self->respond(std::move(res)); });
      });
      return;
    }
    respond(handle_request(impl_.runner, method, target, req_.body()));
  }

  void respond(HttpResponse r) {
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(r.status),
                                                                   req_.version());
    res->set(http::field::server, "emcloud");
    res->set(http::field::content_type, r.content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res->set(http::field::access_control_allow_headers, "Content-Type");
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(r.body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        self->close();
        return;
      }
      self->do_read();
    });
  }

  void close() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  Server::Impl& impl_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

void Server::Impl::do_accept() {
  acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted || !acceptor->is_open()) return;
    } else {
      std::make_shared<HttpSession>(std::move(socket), *this)->run();
    }
    do_accept();
  });
}

Server::Server(scenario::Runner& runner, ServerOptions options)
    : impl_(std::make_unique<Impl>(runner, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  if (impl_->running) return;
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.address, ec);
  if (ec) throw std::invalid_argument("bad listen address '" + impl_->options.address + "'");
  const tcp::endpoint endpoint{address, impl_->options.port};

  impl_->acceptor.emplace(impl_->ioc);
  auto& acc = *impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    impl_->acceptor.reset();
    throw PortInUse("cannot listen on " + impl_->options.address + ":" + std::to_string(impl_->options.port) +
                    ": " + ec.message());
  }
  impl_->bound_port = acc.local_endpoint().port();
  impl_->running = true;
  impl_->do_accept();
  const int n = std::max(1, impl_->options.threads);
  for (int i = 0; i < n; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void Server::stop() {
  if (!impl_ || !impl_->running) return;
  impl_->running = false;
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor->close(ec);
  });
  std::vector<std::thread> helpers;
  {
    std::lock_guard lock(impl_->helpers_mu);
    helpers.swap(impl_->helpers);
  }
  for (auto& t : helpers) t.join();
  impl_->ioc.stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

std::uint16_t Server::port() const { return impl_->bound_port; }

std::size_t Server::session_count() const { return impl_->sessions.load(); }

}  // namespace emcloud::gateway
