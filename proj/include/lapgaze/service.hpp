#pragma once

// Network host for the engine: one port serving HTTP (control + downloads + static UI)
// and a WebSocket channel at /ws (snapshots out; gaze, input and control in).
//
// Threading: a single io_context thread runs every network handler and the tick
// timer, so the engine is only ever touched from that thread. Inbound messages never
// mutate the engine directly; they are stamped and queued with Engine::submit and
// applied on the next tick.
//
// WebSocket messages (JSON, "type" discriminator)
//   in:  {"type":"gaze","yaw":rad,"pitch":rad,"provenance":"ui"|"trace"}
//        {"type":"input","side":"left"|"right","edge":"press"|"release","source":"keyboard"|"remote"|...}
//        {"type":"control","action":"recenter"|"set_filter"|"start_trial"|"finish_trial"|"abort_trial","args":{...}}
//   out: {"type":"hello","role":"writer"|"observer","session":id|null,"schema":1}
//        {"type":"snapshot",...}  (see StateSnapshot)
//        {"type":"error","message":...}
// The service stamps gaze, input and control (args.t) with its own monotonic clock
// (ms since start); a client-supplied "t" is ignored.

#include <atomic>
#include <chrono>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/asio.hpp>
#include <boost/asio/serial_port.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "json.hpp"
#include "lapgaze/config.hpp"
#include "lapgaze/engine.hpp"

namespace lapgaze::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

class Server;

namespace detail {

inline std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else if (s[i] == '+') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

inline std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = i;
    while (j < path.size() && path[j] != '/') ++j;
    if (j > i) parts.push_back(url_decode(path.substr(i, j - i)));
    i = j;
  }
  return parts;
}

inline std::map<std::string, std::string> parse_query(std::string_view q) {
  std::map<std::string, std::string> out;
  while (!q.empty()) {
    const std::size_t amp = q.find('&');
    const std::string_view kv = q.substr(0, amp);
    const std::size_t eq = kv.find('=');
    if (eq == std::string_view::npos) out[url_decode(kv)] = "";
    else out[url_decode(kv.substr(0, eq))] = url_decode(kv.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    q.remove_prefix(amp + 1);
  }
  return out;
}

inline const char* mime_type(const std::filesystem::path& p) {
  static const std::map<std::string, const char*> types{
      {".html", "text/html"},        {".htm", "text/html"},        {".js", "application/javascript"},
      {".mjs", "application/javascript"}, {".css", "text/css"},   {".json", "application/json"},
      {".png", "image/png"},         {".jpg", "image/jpeg"},       {".jpeg", "image/jpeg"},
      {".gif", "image/gif"},         {".bmp", "image/bmp"},        {".svg", "image/svg+xml"},
      {".webp", "image/webp"},       {".ico", "image/x-icon"},     {".mp4", "video/mp4"},
      {".webm", "video/webm"},       {".txt", "text/plain"},       {".wasm", "application/wasm"}};
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  auto it = types.find(ext);
  return it == types.end() ? "application/octet-stream" : it->second;
}

inline std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename. Disk trouble is reported, not thrown: the session keeps running.
inline bool write_file(const std::filesystem::path& p, const std::string& data) {
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << data;
    if (!out) {
      std::cerr << "lapgaze: cannot write " << tmp << '\n';
      return false;
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, p, ec);
  if (ec) std::cerr << "lapgaze: cannot write " << p << ": " << ec.message() << '\n';
  return !ec;
}

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>lapgaze</title></head><body>"
    "<h1>lapgaze service</h1><p>No UI bundle configured (set <code>ui_dir</code>). "
    "WebSocket at <code>/ws</code>, API under <code>/api/</code>.</p></body></html>";

}  // namespace detail

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  static constexpr std::size_t kMaxQueued = 64;

  WsSession(tcp::socket&& socket, Server& server) : ws_(std::move(socket)), server_(server) {}

  void accept(Request req);
  void send(std::shared_ptr<const std::string> text) {
    if (closed_) return;
    outq_.push_back(std::move(text));
    // slow reader: drop the oldest queued message that is not being written
    if (outq_.size() > kMaxQueued) outq_.erase(outq_.begin() + 1);
    if (outq_.size() == 1) do_write();
  }
  void close() {
    if (closed_) return;
    closed_ = true;
    ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
  }
  bool writer() const { return writer_; }
  void set_writer(bool w) { writer_ = w; }

 private:
  void do_read() {
    ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }
  void on_read(beast::error_code ec);
  void do_write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*outq_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_write(ec);
    });
  }
  void on_write(beast::error_code ec);

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buf_;
  std::deque<std::shared_ptr<const std::string>> outq_;
  Server& server_;
  bool writer_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Server& server) : stream_(std::move(socket)), server_(server) {}
  void run() { do_read(); }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(8u << 20);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buf_, *parser_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }
  void on_read(beast::error_code ec);

  beast::tcp_stream stream_;
  beast::flat_buffer buf_;
  std::optional<http::request_parser<http::string_body>> parser_;
  Server& server_;
};

class Server {
 public:
  explicit Server(SessionConfig cfg)
      : cfg_(std::move(cfg)),
        acceptor_(io_),
        timer_(io_),
        serial_(io_),
        serial_parser_(cfg_.serial.source),
        t0_(std::chrono::steady_clock::now()) {}

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;
  ~Server() { stop_session(); }

  /// Validates paths, binds the port, opens the serial device and starts a session.
  /// Everything that can fail at startup throws here.
  void start() {
    validate_paths(cfg_);
    beast::error_code ec;
    const auto addr = asio::ip::make_address(cfg_.bind, ec);
    if (ec) throw std::runtime_error("invalid bind address '" + cfg_.bind + "'");
    const tcp::endpoint ep{addr, cfg_.port};
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(asio::socket_base::max_listen_connections, ec);
    if (ec)
      throw std::runtime_error("cannot listen on " + cfg_.bind + ":" + std::to_string(cfg_.port) + ": " + ec.message());
    port_ = acceptor_.local_endpoint().port();
    if (cfg_.serial.device) open_serial(*cfg_.serial.device);
    start_session(0);
    do_accept();
    next_tick_ = std::chrono::steady_clock::now();
    schedule_tick();
  }

  void run() { io_.run(); }

  /// Thread-safe shutdown request.
  void stop() {
    asio::post(io_, [this] {
      stopping_ = true;
      beast::error_code ec;
      acceptor_.close(ec);
      timer_.cancel();
      serial_.close(ec);
      for (auto& w : clients_)
        if (auto s = w.lock()) s->close();
      stop_session();
      io_.stop();
    });
  }

  unsigned short port() const { return port_; }
  const SessionConfig& config() const { return cfg_; }
  asio::io_context& io() { return io_; }
  double clock_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }

  // called by sessions (io thread)
  void attach(const std::shared_ptr<WsSession>& s) {
    prune();
    const bool has_writer = std::any_of(clients_.begin(), clients_.end(), [](const auto& w) {
      auto p = w.lock();
      return p && p->writer();
    });
    s->set_writer(!has_writer);
    clients_.push_back(s);
    s->send(std::make_shared<const std::string>(hello(*s)));
  }

  void detach(WsSession* s) {
    const bool was_writer = s->writer();
    s->set_writer(false);
    std::erase_if(clients_, [s](const auto& w) {
      auto p = w.lock();
      return !p || p.get() == s;
    });
    if (was_writer) {
      // promote the longest-connected observer
      for (auto& w : clients_)
        if (auto p = w.lock()) {
          p->set_writer(true);
          p->send(std::make_shared<const std::string>(hello(*p)));
          break;
        }
    }
  }

  void on_ws_message(WsSession& from, const std::string& text) {
    auto error = [&](const std::string& message) {
      from.send(std::make_shared<const std::string>(nlohmann::json{{"type", "error"}, {"message", message}}.dump()));
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      return error(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
      return error("message needs a string \"type\"");
    const std::string type = j.at("type").get<std::string>();
    if (type == "ping") {
      from.send(std::make_shared<const std::string>(nlohmann::json{{"type", "pong"}}.dump()));
      return;
    }
    if (!from.writer()) return error("read-only observer: only the writer connection may send " + type);
    if (!live_) return error("no active session");
    try {
      nlohmann::json payload = j;
      payload.erase("type");
      if (type == "gaze" || type == "input") payload["t"] = 0.0;
      if (type == "input" && !payload.contains("source")) payload["source"] = "remote";
      Inbound m = parse_inbound(type, payload);
      stamp(m);
      live_->engine->submit(std::move(m));
    } catch (const std::exception& e) {
      error(e.what());
    }
  }

  Response handle(Request&& req);

 private:
  struct LiveSession {
    std::string id;
    std::filesystem::path dir;
    int participant = 0;
    std::unique_ptr<Engine> engine;
    std::ofstream log;
    std::size_t captures_written = 0;
  };

  void stamp(Inbound& m) {
    const double now = clock_ms();
    if (auto* g = std::get_if<msg::Gaze>(&m)) {
      last_gaze_stamp_ = std::max(now, last_gaze_stamp_ + 1e-3);
      g->sample.t = last_gaze_stamp_;
    } else if (auto* i = std::get_if<msg::Input>(&m)) {
      i->event.t = now;
    } else if (auto* c = std::get_if<msg::Control>(&m)) {
      c->args["t"] = now;
    }
  }

  std::string hello(const WsSession& s) const {
    return nlohmann::json{{"type", "hello"},
                          {"role", s.writer() ? "writer" : "observer"},
                          {"session", live_ ? nlohmann::json(live_->id) : nlohmann::json()},
                          {"schema", kSnapshotSchema}}
        .dump();
  }

  void prune() {
    std::erase_if(clients_, [](const auto& w) { return w.expired(); });
  }

  void do_accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (!stopping_ && ec != asio::error::operation_aborted) do_accept();
        return;
      }
      std::make_shared<HttpSession>(std::move(socket), *this)->run();
      do_accept();
    });
  }

  void schedule_tick() {
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / cfg_.tick_hz));
    next_tick_ += period;
    const auto now = std::chrono::steady_clock::now();
    if (next_tick_ < now - period) next_tick_ = now;  // fell behind: resync instead of bursting
    timer_.expires_at(next_tick_);
    timer_.async_wait([this](beast::error_code ec) {
      if (ec || stopping_) return;
      on_tick();
      schedule_tick();
    });
  }

  void on_tick() {
    if (!live_) return;
    const StateSnapshot snap = live_->engine->tick();
    prune();
    if (!clients_.empty()) {
      nlohmann::json j = snap;
      auto text = std::make_shared<const std::string>(j.dump());
      for (auto& w : clients_)
        if (auto s = w.lock()) s->send(text);
    }
    persist_new();
  }

  // Append-only persistence; the log is flushed whenever a trial ends.
  void persist_new() {
    namespace fs = std::filesystem;
    LiveSession& s = *live_;
    const auto& caps = s.engine->captures();
    for (; s.captures_written < caps.size(); ++s.captures_written) {
      const CaptureRecord& c = caps[s.captures_written];
      const fs::path base = s.dir / "captures" / ("capture-" + std::to_string(c.id));
      detail::write_file(base.string() + ".json", nlohmann::json(c).dump(2));
      detail::write_file(base.string() + ".bmp", encode_bmp(render_capture(c)));
    }
    const auto done = s.engine->take_completed();
    if (done.empty()) return;
    s.log.flush();
    for (const auto& r : done) detail::write_file(s.dir / "results" / (r.trial_id + ".json"), nlohmann::json(r).dump(2));
    detail::write_file(s.dir / "results.csv", results_csv(s.engine->results()));
  }

  Image render_capture(const CaptureRecord& c) const {
    const double aspect = live_->engine->tool().aspect();
    constexpr int h = 480;
    Image img(static_cast<int>(std::lround(h * aspect)), h, Rgb{0, 0, 0});
    rasterize(c.layer, aspect, img);
    return img;
  }

  static std::string new_session_id() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y%m%d-%H%M%S");
    return ss.str();
  }

  std::string start_session(int participant) {
    namespace fs = std::filesystem;
    const fs::path root = fs::path(cfg_.output_dir) / "sessions";
    std::string id = new_session_id();
    for (int n = 2; fs::exists(root / id); ++n) id = new_session_id() + "-" + std::to_string(n);
    auto s = std::make_unique<LiveSession>();
    s->id = id;
    s->dir = root / id;
    s->participant = participant;
    fs::create_directories(s->dir / "captures");
    fs::create_directories(s->dir / "results");
    s->log.open(s->dir / "log.jsonl", std::ios::binary | std::ios::app);
    if (!s->log) throw std::runtime_error("cannot write " + (s->dir / "log.jsonl").string());
    ImageLibrary lib = cfg_.image_root.empty() ? ImageLibrary{} : ImageLibrary::load(cfg_.image_root);
    s->engine = std::make_unique<Engine>(cfg_.engine, std::move(lib), id, Direction{}, false);
    std::ofstream* out = &s->log;
    s->engine->open_log([out](const std::string& line) { *out << line << '\n'; });
    detail::write_file(s->dir / "session.json",
                       nlohmann::json{{"session", id}, {"participant", participant}, {"config", cfg_}}.dump(2));
    s->log.flush();
    live_ = std::move(s);
    for (auto& w : clients_)
      if (auto c = w.lock()) c->send(std::make_shared<const std::string>(hello(*c)));
    return id;
  }

  void stop_session() {
    if (!live_) return;
    // apply whatever is still queued so the log is complete
    if (live_->engine->pending() > 0) {
      live_->engine->tick();
      persist_new();
    }
    live_->engine->close_log();
    live_->log.flush();
    detail::write_file(live_->dir / "results.csv", results_csv(live_->engine->results()));
    live_.reset();
  }

  std::optional<std::filesystem::path> session_dir(const std::string& id) const {
    namespace fs = std::filesystem;
    if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos) return std::nullopt;
    const fs::path p = fs::path(cfg_.output_dir) / "sessions" / id;
    if (!fs::is_directory(p)) return std::nullopt;
    return p;
  }

  std::vector<TrialResult> stored_results(const std::filesystem::path& dir) const {
    std::vector<TrialResult> out;
    if (!std::filesystem::is_directory(dir / "results")) return out;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir / "results"))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
      if (auto text = detail::read_file(f)) out.push_back(nlohmann::json::parse(*text).get<TrialResult>());
    return out;
  }

  void open_serial(const std::string& device) {
    beast::error_code ec;
    serial_.open(device, ec);
    if (ec) throw std::runtime_error("cannot open serial device '" + device + "': " + ec.message());
    using sp = asio::serial_port_base;
    serial_.set_option(sp::baud_rate(cfg_.serial.baud), ec);
    if (!ec) serial_.set_option(sp::character_size(8), ec);
    if (!ec) serial_.set_option(sp::parity(sp::parity::none), ec);
    if (!ec) serial_.set_option(sp::stop_bits(sp::stop_bits::one), ec);
    if (!ec) serial_.set_option(sp::flow_control(sp::flow_control::none), ec);
    if (ec) throw std::runtime_error("cannot configure serial device '" + device + "': " + ec.message());
    read_serial();
  }

  void read_serial() {
    serial_.async_read_some(asio::buffer(serial_buf_), [this](beast::error_code ec, std::size_t n) {
      if (ec) {
        if (!stopping_) std::cerr << "lapgaze: serial read stopped: " << ec.message() << '\n';
        return;
      }
      const auto events = serial_parser_.feed(std::string_view(serial_buf_.data(), n), clock_ms());
      if (live_)
        for (const auto& e : events) live_->engine->submit(msg::Input{e});
      read_serial();
    });
  }

  Response route_api(const Request& req, const std::vector<std::string>& parts,
                     const std::map<std::string, std::string>& query);
  Response serve_image(const Request& req, const std::string& folder, const std::string& index);
  Response serve_static(const Request& req, const std::string& path);

  asio::io_context io_{1};
  SessionConfig cfg_;
  tcp::acceptor acceptor_;
  asio::steady_timer timer_;
  asio::serial_port serial_;
  std::array<char, 512> serial_buf_{};
  SerialParser serial_parser_;
  std::chrono::steady_clock::time_point t0_;
  std::chrono::steady_clock::time_point next_tick_;
  double last_gaze_stamp_ = -1.0;
  unsigned short port_ = 0;
  bool stopping_ = false;
  std::vector<std::weak_ptr<WsSession>> clients_;
  std::unique_ptr<LiveSession> live_;
};

// ---- response helpers

namespace detail {
inline Response make_response(const Request& req, http::status status, std::string body, const char* type) {
  Response res{status, req.version()};
  res.set(http::field::server, "lapgaze");
  res.set(http::field::content_type, type);
  res.set(http::field::cache_control, "no-store");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}
inline Response json_response(const Request& req, http::status status, const nlohmann::json& j) {
  return make_response(req, status, j.dump(), "application/json");
}
inline Response error_response(const Request& req, http::status status, const std::string& message) {
  return json_response(req, status, {{"error", message}});
}
}  // namespace detail

inline Response Server::handle(Request&& req) {
  const std::string target(req.target());
  const std::size_t q = target.find('?');
  const std::string path = target.substr(0, q);
  const auto query = q == std::string::npos ? std::map<std::string, std::string>{}
                                            : detail::parse_query(std::string_view(target).substr(q + 1));
  const auto parts = detail::split_path(path);
  try {
    if (!parts.empty() && parts[0] == "api") return route_api(req, parts, query);
    if (req.method() != http::verb::get && req.method() != http::verb::head)
      return detail::error_response(req, http::status::method_not_allowed, "static files are read-only");
    return serve_static(req, path);
  } catch (const std::exception& e) {
    return detail::error_response(req, http::status::bad_request, e.what());
  }
}

inline Response Server::route_api(const Request& req, const std::vector<std::string>& parts,
                                  const std::map<std::string, std::string>& query) {
  using detail::error_response;
  using detail::json_response;
  const bool get = req.method() == http::verb::get;
  const bool post = req.method() == http::verb::post;
  const std::size_t n = parts.size();
  auto body = [&] { return req.body().empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body()); };
  auto participant = [&] {
    if (auto it = query.find("participant"); it != query.end()) return std::stoi(it->second);
    return live_ ? live_->participant : 0;
  };

  if (get && n == 2 && parts[1] == "config") return json_response(req, http::status::ok, cfg_);
  if (get && n == 2 && parts[1] == "state") {
    if (!live_) return error_response(req, http::status::conflict, "no active session");
    return json_response(req, http::status::ok, live_->engine->snapshot());
  }
  if (get && n == 2 && parts[1] == "schedule") {
    const int p = participant();
    return json_response(req, http::status::ok,
                         {{"participant", p}, {"design", to_string(cfg_.design)},
                          {"conditions", condition_schedule(p, cfg_.design)}});
  }
  if (post && n == 3 && parts[1] == "session" && parts[2] == "start") {
    if (live_) return error_response(req, http::status::conflict, "session " + live_->id + " is active; stop it first");
    const std::string id = start_session(body().value("participant", 0));
    return json_response(req, http::status::ok, {{"session", id}});
  }
  if (post && n == 3 && parts[1] == "session" && parts[2] == "stop") {
    if (!live_) return error_response(req, http::status::conflict, "no active session");
    const std::string id = live_->id;
    const std::size_t results = live_->engine->results().size();
    stop_session();
    return json_response(req, http::status::ok, {{"session", id}, {"results", results}});
  }
  if (post && n == 3 && parts[1] == "trial" && (parts[2] == "start" || parts[2] == "abort" || parts[2] == "finish")) {
    if (!live_) return error_response(req, http::status::conflict, "no active session");
    LiveSession& s = *live_;
    msg::Control c{parts[2] + "_trial", nlohmann::json::object()};
    if (parts[2] == "start") {
      const auto b = body();
      if (b.contains("index")) {
        const auto schedule = condition_schedule(s.participant, cfg_.design);
        const auto k = b.at("index").get<std::size_t>();
        if (k >= schedule.size()) return error_response(req, http::status::bad_request, "schedule index out of range");
        const Condition& cond = schedule[k];
        c.args = {{"interface", cond.interface.label()}, {"task", to_string(cond.kind)}, {"level", to_string(cond.level)},
                  {"seed", b.value("seed", static_cast<std::uint64_t>(s.participant) * 1000 + k + 1)}};
      } else {
        const Condition cond = b.get<Condition>();  // validates before queueing
        c.args = {{"interface", cond.interface.label()}, {"task", to_string(cond.kind)}, {"level", to_string(cond.level)},
                  {"seed", b.value("seed", std::uint64_t{1})}};
      }
    }
    Inbound m = std::move(c);
    stamp(m);
    s.engine->submit(std::move(m));
    return json_response(req, http::status::accepted, {{"queued", parts[2] + "_trial"}, {"session", s.id}});
  }
  if (get && n == 2 && parts[1] == "sessions") {
    namespace fs = std::filesystem;
    nlohmann::json list = nlohmann::json::array();
    const fs::path root = fs::path(cfg_.output_dir) / "sessions";
    std::vector<std::string> ids;
    if (fs::is_directory(root))
      for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) ids.push_back(e.path().filename().string());
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids)
      list.push_back({{"session", id}, {"active", live_ && live_->id == id},
                      {"results", stored_results(root / id).size()}});
    return json_response(req, http::status::ok, list);
  }
  if (get && n == 4 && parts[1] == "sessions") {
    const auto dir = session_dir(parts[2]);
    if (!dir) return error_response(req, http::status::not_found, "unknown session '" + parts[2] + "'");
    if (live_ && live_->id == parts[2]) live_->log.flush();
    if (parts[3] == "log") {
      auto text = detail::read_file(*dir / "log.jsonl");
      if (!text) return error_response(req, http::status::not_found, "no log");
      return detail::make_response(req, http::status::ok, std::move(*text), "application/x-ndjson");
    }
    if (parts[3] == "results") return json_response(req, http::status::ok, stored_results(*dir));
    if (parts[3] == "results.csv")
      return detail::make_response(req, http::status::ok, results_csv(stored_results(*dir)), "text/csv");
  }
  if (get && n == 2 && parts[1] == "results") {
    if (!live_) return error_response(req, http::status::conflict, "no active session");
    return json_response(req, http::status::ok, live_->engine->results());
  }
  if (get && n == 2 && parts[1] == "results.csv") {
    if (!live_) return error_response(req, http::status::conflict, "no active session");
    return detail::make_response(req, http::status::ok, results_csv(live_->engine->results()), "text/csv");
  }
  if (get && n == 3 && parts[1] == "results") {
    if (live_)
      for (const auto& r : live_->engine->results())
        if (r.trial_id == parts[2]) return json_response(req, http::status::ok, r);
    namespace fs = std::filesystem;
    const fs::path root = fs::path(cfg_.output_dir) / "sessions";
    if (parts[2].find('/') == std::string::npos && parts[2].find("..") == std::string::npos && fs::is_directory(root))
      for (const auto& e : fs::directory_iterator(root))
        if (auto text = detail::read_file(e.path() / "results" / (parts[2] + ".json")))
          return detail::make_response(req, http::status::ok, std::move(*text), "application/json");
    return error_response(req, http::status::not_found, "unknown trial '" + parts[2] + "'");
  }
  if (get && n == 4 && parts[1] == "images") return serve_image(req, parts[2], parts[3]);
  return error_response(req, http::status::not_found, "no such endpoint");
}

inline Response Server::serve_image(const Request& req, const std::string& folder, const std::string& index) {
  if (!live_) return detail::error_response(req, http::status::conflict, "no active session");
  const Engine& eng = *live_->engine;
  const auto fi = eng.browser().library().find(folder);
  if (!fi) return detail::error_response(req, http::status::not_found, "unknown folder");
  const auto& images = eng.browser().library().at(*fi).images;
  const std::size_t i = std::stoul(index);
  if (i >= images.size()) return detail::error_response(req, http::status::not_found, "image index out of range");
  const std::string& uri = images[i].uri;
  if (uri.rfind("file:", 0) == 0) {
    const std::filesystem::path p = uri.substr(5);
    auto data = detail::read_file(p);
    if (!data) return detail::error_response(req, http::status::not_found, "image file missing");
    return detail::make_response(req, http::status::ok, std::move(*data), detail::mime_type(p));
  }
  if (uri.rfind("task:", 0) == 0) {
    auto it = eng.generated_images().find(uri.substr(5));
    if (it == eng.generated_images().end()) return detail::error_response(req, http::status::not_found, "task image gone");
    return detail::make_response(req, http::status::ok, encode_bmp(it->second), "image/bmp");
  }
  if (uri.rfind("capture:", 0) == 0) {
    const int id = std::stoi(uri.substr(8));
    for (const auto& c : eng.captures())
      if (c.id == id) return detail::make_response(req, http::status::ok, encode_bmp(render_capture(c)), "image/bmp");
  }
  return detail::error_response(req, http::status::not_found, "unresolvable image uri");
}

inline Response Server::serve_static(const Request& req, const std::string& path) {
  namespace fs = std::filesystem;
  if (cfg_.ui_dir.empty()) {
    if (path == "/" || path == "/index.html")
      return detail::make_response(req, http::status::ok, detail::kPlaceholderPage, "text/html");
    return detail::error_response(req, http::status::not_found, "not found");
  }
  fs::path rel;
  for (const auto& part : detail::split_path(path)) {
    if (part == ".." || part == "." || part.find('\\') != std::string::npos)
      return detail::error_response(req, http::status::bad_request, "invalid path");
    rel /= part;
  }
  fs::path file = fs::path(cfg_.ui_dir) / rel;
  if (rel.empty() || fs::is_directory(file)) file /= "index.html";
  auto data = detail::read_file(file);
  if (!data) return detail::error_response(req, http::status::not_found, "not found");
  Response res = detail::make_response(req, http::status::ok, std::move(*data), detail::mime_type(file));
  if (req.method() == http::verb::head) res.body().clear();
  return res;
}

// ---- session implementations

inline void WsSession::accept(Request req) {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->server_.attach(self);
    self->do_read();
  });
}

inline void WsSession::on_read(beast::error_code ec) {
  if (ec) {
    closed_ = true;
    server_.detach(this);
    return;
  }
  const std::string text = beast::buffers_to_string(buf_.data());
  buf_.consume(buf_.size());
  server_.on_ws_message(*this, text);
  do_read();
}

inline void WsSession::on_write(beast::error_code ec) {
  if (ec) {
    closed_ = true;
    server_.detach(this);
    return;
  }
  outq_.pop_front();
  if (!outq_.empty()) do_write();
}

inline void HttpSession::on_read(beast::error_code ec) {
  if (ec == http::error::end_of_stream) {
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    return;
  }
  if (ec) return;
  if (websocket::is_upgrade(parser_->get())) {
    if (parser_->get().target() == "/ws") {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), server_)->accept(parser_->release());
      return;
    }
  }
  auto res = std::make_shared<Response>(server_.handle(parser_->release()));
  http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code wec, std::size_t) {
    if (wec) return;
    if (res->need_eof()) {
      beast::error_code sec;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, sec);
      return;
    }
    self->do_read();
  });
}

}  // namespace lapgaze::service
