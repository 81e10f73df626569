/**
 * @file server.hpp
 * @brief HTTP + WebSocket front end for an ArmService.
 *
 *   POST /api/command      {"text": "..."}  -> CommandOutcome JSON
 *   GET  /api/state                          -> joints, registers, duty
 *   GET  /api/config                         -> geometry, calibration, limits
 *   PUT  /api/calibration  calibration JSON  -> applied profile
 *   GET  /api/trace/{id}                     -> frames + trajectory CSV
 *   GET  /api/stream       (WebSocket)       -> one JSON tick event per tick
 *
 * Commands from every connection funnel into one CommandExecutor, so they
 * run strictly in arrival order. A WebSocket client may also send
 * {"text": "..."}; the outcome comes back on the same socket.
 */
#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "voicearm/arm_service.hpp"
#include "voicearm/json_util.hpp"
#include "voicearm/persistence.hpp"

namespace voicearm::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json_util::json;

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  bool realtime = false;       // pace ticks at one per 20 ms
  int io_threads = 2;
};

using Response = http::response<http::string_body>;
using Request = http::request<http::string_body>;

inline Response make_response(const Request& req, http::status status, const json& body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

inline json error_body(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

class ArmServer;

class StreamSession : public std::enable_shared_from_this<StreamSession> {
 public:
  static constexpr std::size_t kMaxQueued = 4096;

  StreamSession(tcp::socket&& socket, ArmServer& server)
      : ws_(std::move(socket)), server_(server) {}

  void run(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&StreamSession::on_accept, shared_from_this()));
  }

  /// Thread-safe: queues a text message for this client.
  void send(std::string msg) {
    net::post(ws_.get_executor(),
              [self = shared_from_this(), m = std::move(msg)]() mutable { self->enqueue(std::move(m)); });
  }

 private:
  void on_accept(beast::error_code ec);
  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&StreamSession::on_read, shared_from_this()));
  }
  void on_read(beast::error_code ec, std::size_t);

  void enqueue(std::string m) {
    if (closed_ || queue_.size() >= kMaxQueued) return;
    queue_.push_back(std::move(m));
    if (queue_.size() == 1) do_write();
  }
  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    beast::bind_front_handler(&StreamSession::on_write, shared_from_this()));
  }
  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      queue_.clear();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool closed_ = false;
  ArmServer& server_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, ArmServer& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    net::dispatch(stream_.get_executor(),
                  beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

  /// Thread-safe: hands a finished response back to this connection.
  void reply(Response res) {
    net::post(stream_.get_executor(), [self = shared_from_this(), r = std::move(res)]() mutable {
      self->write(std::move(r));
    });
  }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(1 << 20);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t);

  void write(Response res) {
    auto sp = std::make_shared<Response>(std::move(res));
    stream_.expires_after(std::chrono::seconds(60));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (sp->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  ArmServer& server_;
};

class ArmServer {
 public:
  ArmServer(service::ArmService& svc, ServerOptions opts)
      : service_(svc), opts_(std::move(opts)), acceptor_(ioc_), executor_(svc) {
    tcp::endpoint ep{net::ip::make_address(opts_.address), opts_.port};
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen(net::socket_base::max_listen_connections);
    service_.set_tick_listener([this](const service::TickEvent& ev) { broadcast_tick(ev); });
  }

  ArmServer(const ArmServer&) = delete;
  ArmServer& operator=(const ArmServer&) = delete;

  ~ArmServer() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  void start() {
    do_accept();
    for (int i = 0; i < std::max(1, opts_.io_threads); ++i) {
      threads_.emplace_back([this] { ioc_.run(); });
    }
  }

  void stop() {
    if (stopped_.exchange(true)) return;
    service_.set_tick_listener({});
    ioc_.stop();
    for (auto& t : threads_) {
      if (t.joinable()) t.join();
    }
  }

  /// Blocks until stop() is called from another thread.
  void wait() {
    for (auto& t : threads_) {
      if (t.joinable()) t.join();
    }
  }

  service::CommandExecutor& executor() { return executor_; }
  service::StateSnapshot snapshot() const { return service_.snapshot(); }

  void subscribe(const std::shared_ptr<StreamSession>& s) {
    std::lock_guard lock(subs_mu_);
    subscribers_.push_back(s);
  }

  /// Queues a command; `done` runs on the executor thread with the outcome.
  template <typename Done>
  void submit_command(std::string text, Done done) {
    executor_.submit([text = std::move(text), done = std::move(done)](service::ArmService& s) {
      done(s.process_command(text));
      return 0;
    });
  }

  void handle(Request req, const std::shared_ptr<HttpSession>& session) {
    const std::string target(req.target());
    const auto method = req.method();
    try {
      if (method == http::verb::options) {
        Response res{http::status::no_content, req.version()};
        res.set(http::field::access_control_allow_origin, "*");
        res.set(http::field::access_control_allow_methods, "GET, POST, PUT, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
        res.keep_alive(req.keep_alive());
        res.prepare_payload();
        session->reply(std::move(res));
        return;
      }
      if (target == "/api/command") {
        if (method != http::verb::post) return session->reply(not_allowed(req));
        const json body = json_util::parse(req.body(), "request body");
        if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
          return session->reply(make_response(
              req, http::status::bad_request, error_body("SchemaError", "body needs a string \"text\"")));
        }
        submit_command(body["text"].get<std::string>(),
                       [session, req](const service::CommandOutcome& o) {
                         session->reply(make_response(req, http::status::ok, service::to_json(o)));
                       });
        return;
      }
      if (target == "/api/state") {
        if (method != http::verb::get) return session->reply(not_allowed(req));
        return session->reply(make_response(req, http::status::ok, service::to_json(service_.snapshot())));
      }
      if (target == "/api/config") {
        if (method != http::verb::get) return session->reply(not_allowed(req));
        return session->reply(make_response(req, http::status::ok, config_json()));
      }
      if (target == "/api/calibration") {
        if (method != http::verb::put) return session->reply(not_allowed(req));
        const auto profile = persistence::profile_from_json(json_util::parse(req.body(), "request body"));
        executor_.submit([profile, session, req](service::ArmService& s) {
          try {
            s.set_calibration(profile);
            session->reply(make_response(req, http::status::ok, persistence::profile_to_json(profile)));
          } catch (const Error& e) {
            session->reply(make_response(req, http::status::unprocessable_entity,
                                         error_body(std::string(to_string(e.code())), e.what())));
          }
          return 0;
        });
        return;
      }
      const std::string trace_prefix = "/api/trace/";
      if (target.rfind(trace_prefix, 0) == 0) {
        if (method != http::verb::get) return session->reply(not_allowed(req));
        const std::string id_text = target.substr(trace_prefix.size());
        std::uint64_t id = 0;
        try {
          std::size_t used = 0;
          id = std::stoull(id_text, &used);
          if (used != id_text.size()) throw std::invalid_argument("id");
        } catch (const std::exception&) {
          return session->reply(
              make_response(req, http::status::bad_request, error_body("BadParameter", "trace id must be an integer")));
        }
        if (auto t = service_.trace(id)) {
          return session->reply(make_response(req, http::status::ok, service::to_json(*t)));
        }
        return session->reply(
            make_response(req, http::status::not_found, error_body("NotFound", "no trace " + id_text)));
      }
      session->reply(make_response(req, http::status::not_found, error_body("NotFound", target)));
    } catch (const Error& e) {
      session->reply(make_response(req, http::status::bad_request,
                                   error_body(std::string(to_string(e.code())), e.what())));
    }
  }

  json config_json() const {
    const auto& s = service_.session();
    json scripts = json::array();
    for (const auto& [name, script] : s.scripts) scripts.push_back(name);
    return {{"geometry", {{"l1", s.geometry.l1}, {"l2", s.geometry.l2}}},
            {"calibration", persistence::profile_to_json(service_.profile())},
            {"period_us", actuation::kPeriodUs},
            {"tick_budget", s.tick_budget},
            {"slew_limit", s.slew_limit},
            {"dictionary_size", s.dictionary ? s.dictionary->size() : 0},
            {"scripts", scripts}};
  }

 private:
  static Response not_allowed(const Request& req) {
    return make_response(req, http::status::method_not_allowed,
                         error_body("MethodNotAllowed", std::string(req.method_string())));
  }

  void do_accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpSession>(std::move(socket), *this)->run();
      if (!stopped_) do_accept();
    });
  }

  void broadcast_tick(const service::TickEvent& ev) {
    json j = service::to_json(ev);
    j["type"] = "tick";
    const std::string msg = j.dump();
    {
      std::lock_guard lock(subs_mu_);
      std::vector<std::weak_ptr<StreamSession>> alive;
      for (auto& w : subscribers_) {
        if (auto s = w.lock()) {
          s->send(msg);
          alive.push_back(w);
        }
      }
      subscribers_.swap(alive);
    }
    if (opts_.realtime) std::this_thread::sleep_for(std::chrono::microseconds(actuation::kPeriodUs));
  }

  service::ArmService& service_;
  ServerOptions opts_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  // declared after the io_context so its worker is joined first
  service::CommandExecutor executor_;
  std::vector<std::thread> threads_;
  std::atomic<bool> stopped_{false};
  std::mutex subs_mu_;
  std::vector<std::weak_ptr<StreamSession>> subscribers_;
};

inline void StreamSession::on_accept(beast::error_code ec) {
  if (ec) return;
  server_.subscribe(shared_from_this());
  json hello = service::to_json(server_.snapshot().tick);
  hello["type"] = "tick";
  enqueue(hello.dump());
  do_read();
}

inline void StreamSession::on_read(beast::error_code ec, std::size_t) {
  if (ec) {
    closed_ = true;
    return;
  }
  const std::string msg = beast::buffers_to_string(buffer_.data());
  buffer_.consume(buffer_.size());
  json reply;
  try {
    const json body = json_util::parse(msg, "stream message");
    if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
      throw Error(ErrorCode::SchemaError, "message needs a string \"text\"");
    }
    auto self = shared_from_this();
    server_.submit_command(body["text"].get<std::string>(), [self](const service::CommandOutcome& o) {
      json j = service::to_json(o);
      j["type"] = "outcome";
      self->send(j.dump());
    });
  } catch (const Error& e) {
    reply = error_body(std::string(to_string(e.code())), e.what());
    reply["type"] = "error";
    enqueue(reply.dump());
  }
  do_read();
}

inline void HttpSession::on_read(beast::error_code ec, std::size_t) {
  if (ec == http::error::end_of_stream) {
    beast::error_code ignored;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    return;
  }
  if (ec) return;
  Request req = parser_->release();
  if (websocket::is_upgrade(req)) {
    if (req.target() == "/api/stream") {
      stream_.expires_never();
      std::make_shared<StreamSession>(stream_.release_socket(), server_)->run(std::move(req));
      return;
    }
    write(make_response(req, http::status::not_found, error_body("NotFound", std::string(req.target()))));
    return;
  }
  server_.handle(std::move(req), shared_from_this());
}

}  // namespace voicearm::server
