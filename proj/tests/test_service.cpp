#include <gtest/gtest.h>

#include <pty.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include "lapgaze/harness.hpp"
#include "lapgaze/replay.hpp"
#include "lapgaze/service.hpp"

using namespace lapgaze;
namespace fs = std::filesystem;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

// Declared before the server so it outlives it.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("lapgaze-svc-" + name + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct HttpReply {
  int status = 0;
  std::string body;
  std::string content_type;
  json parsed() const { return json::parse(body); }
};

HttpReply http_call(unsigned short port, http::verb verb, const std::string& target, const std::string& body = {}) {
  asio::io_context io;
  beast::tcp_stream stream(io);
  tcp::resolver resolver(io);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  if (!body.empty()) {
    req.set(http::field::content_type, "application/json");
    req.body() = body;
  }
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {static_cast<int>(res.result_int()), res.body(), std::string(res[http::field::content_type])};
}

HttpReply get(unsigned short port, const std::string& target) { return http_call(port, http::verb::get, target); }
HttpReply post(unsigned short port, const std::string& target, const json& body = json::object()) {
  return http_call(port, http::verb::post, target, body.dump());
}

class WsClient {
 public:
  explicit WsClient(unsigned short port) : ws_(io_) {
    tcp::resolver resolver(io_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/ws");
  }
  ~WsClient() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

  // Reads until `pred` holds; snapshots arrive every tick, so this never blocks for long.
  std::optional<json> read_until(const std::function<bool(const json&)>& pred, int max_messages = 1500) {
    for (int i = 0; i < max_messages; ++i)
      if (json j = read(); pred(j)) return j;
    return std::nullopt;
  }

  void send(const json& j) { ws_.write(asio::buffer(j.dump())); }
  void send_text(const std::string& s) { ws_.write(asio::buffer(s)); }

 private:
  asio::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

auto of_type(const std::string& type) {
  return [type](const json& j) { return j.at("type") == type; };
}

class Running {
 public:
  explicit Running(SessionConfig cfg) : server_(std::move(cfg)) {
    server_.start();
    thread_ = std::thread([this] { server_.run(); });
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  unsigned short port() const { return server_.port(); }

 private:
  service::Server server_;
  std::thread thread_;
};

SessionConfig base_config(const fs::path& dir) {
  SessionConfig c;
  c.output_dir = (dir / "out").string();
  c.port = 0;
  return c;
}

// Polls GET /api/state until pred holds.
std::optional<json> wait_state(unsigned short port, const std::function<bool(const json&)>& pred) {
  for (int i = 0; i < 300; ++i) {
    const auto r = get(port, "/api/state");
    if (r.status == 200)
      if (json j = r.parsed(); pred(j)) return j;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return std::nullopt;
}

}  // namespace

TEST(Service, HelloRolesAndObserverRejection) {
  const TempDir tmp("roles");
  const fs::path& dir = tmp.path;
  Running srv(base_config(dir));
  auto writer = std::make_unique<WsClient>(srv.port());
  const json h1 = writer->read();
  EXPECT_EQ(h1.at("type"), "hello");
  EXPECT_EQ(h1.at("role"), "writer");
  EXPECT_TRUE(h1.at("session").is_string());
  EXPECT_EQ(h1.at("schema"), 1);

  WsClient observer(srv.port());
  EXPECT_EQ(observer.read().at("role"), "observer");
  observer.send({{"type", "gaze"}, {"yaw", 0.1}, {"pitch", 0.0}});
  const auto err = observer.read_until(of_type("error"));
  ASSERT_TRUE(err);
  EXPECT_NE(err->at("message").get<std::string>().find("observer"), std::string::npos);

  writer->send({{"type", "ping"}});
  EXPECT_TRUE(writer->read_until(of_type("pong")));
  writer->send_text("{broken");
  EXPECT_TRUE(writer->read_until(of_type("error")));
  writer->send({{"type", "gaze"}, {"yaw", "left"}, {"pitch", 0}});
  EXPECT_TRUE(writer->read_until(of_type("error")));
  writer->send({{"type", "teleport"}});
  EXPECT_TRUE(writer->read_until(of_type("error")));

  writer.reset();  // the observer is promoted
  const auto promoted = observer.read_until(of_type("hello"));
  ASSERT_TRUE(promoted);
  EXPECT_EQ(promoted->at("role"), "writer");
}

TEST(Service, SnapshotCadenceFollowsTickRate) {
  const TempDir tmp("cadence");
  const fs::path& dir = tmp.path;
  auto cfg = base_config(dir);
  cfg.tick_hz = 60;
  Running srv(cfg);
  WsClient c(srv.port());
  ASSERT_TRUE(c.read_until(of_type("snapshot")));
  const auto t0 = std::chrono::steady_clock::now();
  int n = 0;
  std::uint64_t last_tick = 0;
  bool consecutive = true;
  while (std::chrono::steady_clock::now() - t0 < std::chrono::seconds(2)) {
    const json j = c.read();
    if (j.at("type") != "snapshot") continue;
    const auto tick = j.at("tick").get<std::uint64_t>();
    if (last_tick && tick != last_tick + 1) consecutive = false;
    last_tick = tick;
    ++n;
  }
  const double rate = n / 2.0;
  EXPECT_GE(rate, 48.0);
  EXPECT_LE(rate, 72.0);
  EXPECT_TRUE(consecutive);
}

TEST(Service, TrialOverWebSocketMatchesDownloadAndReplay) {
  const TempDir tmp("trial");
  const fs::path& dir = tmp.path;
  Running srv(base_config(dir));
  WsClient c(srv.port());
  const std::string session = c.read().at("session");

  const Condition cond{FilterMode::immediate(), TaskKind::peg_transfer, Level::easy};
  const auto script = perfect_user_script(cond, 7);
  c.send({{"type", "control"}, {"action", "start_trial"},
          {"args", {{"interface", "immediate"}, {"task", "peg"}, {"level", "easy"}, {"seed", 7}}}});
  ASSERT_TRUE(c.read_until([](const json& j) { return j.at("type") == "snapshot" && !j.at("trial").is_null(); }));

  // gaze goes out in bursts; edges are spaced so the server clock clears the debounce window
  std::size_t next = 0;
  for (const auto& g : script.gaze) {
    c.send({{"type", "gaze"}, {"yaw", g.dir.yaw}, {"pitch", g.dir.pitch}, {"provenance", "trace"}});
    while (next < script.inputs.size() && script.inputs[next].t <= g.t) {
      std::this_thread::sleep_for(std::chrono::milliseconds(30));
      const auto& e = script.inputs[next++];
      c.send({{"type", "input"}, {"side", to_string(e.side)}, {"edge", to_string(e.edge)}});
      std::this_thread::sleep_for(std::chrono::milliseconds(30));
    }
  }
  const auto done = c.read_until([](const json& j) {
    return j.at("type") == "snapshot" && j.at("trial").is_null() && !j.at("last_result").is_null();
  });
  ASSERT_TRUE(done);
  const auto live = done->at("last_result").get<TrialResult>();
  EXPECT_EQ(live.status, "completed");
  EXPECT_EQ(live.accuracy, 1.0);
  EXPECT_GT(live.time_ms, 0.0);
  EXPECT_EQ(done->at("captures"), 1);

  const auto dl = get(srv.port(), "/api/results/" + live.trial_id);
  ASSERT_EQ(dl.status, 200);
  EXPECT_EQ(dl.parsed().get<TrialResult>(), live);
  const auto all = get(srv.port(), "/api/results");
  ASSERT_EQ(all.parsed().size(), 1u);
  const auto csv = get(srv.port(), "/api/results.csv");
  EXPECT_EQ(std::count(csv.body.begin(), csv.body.end(), '\n'), 2);
  EXPECT_EQ(csv.content_type, "text/csv");

  const auto task_img = get(srv.port(), "/api/images/peg-easy/1");
  ASSERT_EQ(task_img.status, 200);
  EXPECT_EQ(task_img.body.substr(0, 2), "BM");
  const auto cap = get(srv.port(), "/api/images/captures/0");
  ASSERT_EQ(cap.status, 200);
  EXPECT_EQ(cap.content_type, "image/bmp");
  EXPECT_EQ(get(srv.port(), "/api/images/captures/5").status, 404);

  ASSERT_EQ(post(srv.port(), "/api/session/stop").status, 200);
  const fs::path sdir = dir / "out" / "sessions" / session;
  EXPECT_TRUE(fs::exists(sdir / "session.json"));
  EXPECT_TRUE(fs::exists(sdir / "captures" / "capture-1.bmp"));
  EXPECT_TRUE(fs::exists(sdir / "results" / (live.trial_id + ".json")));
  EXPECT_EQ(get(srv.port(), "/api/results/" + live.trial_id).parsed().get<TrialResult>(), live);
  EXPECT_EQ(get(srv.port(), "/api/sessions/" + session + "/results").parsed().at(0).get<TrialResult>(), live);

  const auto log = get(srv.port(), "/api/sessions/" + session + "/log");
  ASSERT_EQ(log.status, 200);
  std::istringstream in(log.body);
  const auto r = replay(in, false);
  EXPECT_TRUE(r.issues.empty());
  ASSERT_EQ(r.results.size(), 1u);
  EXPECT_EQ(r.results[0], live);
}

TEST(Service, HttpSessionAndTrialControl) {
  const TempDir tmp("http");
  const fs::path& dir = tmp.path;
  Running srv(base_config(dir));
  const unsigned short port = srv.port();

  const auto cfg = get(port, "/api/config");
  ASSERT_EQ(cfg.status, 200);
  EXPECT_EQ(cfg.parsed().at("tick_hz"), 60.0);
  const auto sched = get(port, "/api/schedule?participant=3").parsed();
  EXPECT_EQ(sched.at("conditions").size(), 30u);
  EXPECT_EQ(sched.at("participant"), 3);

  EXPECT_EQ(post(port, "/api/session/start").status, 409);
  EXPECT_EQ(post(port, "/api/session/stop").status, 200);
  EXPECT_EQ(get(port, "/api/state").status, 409);
  EXPECT_EQ(post(port, "/api/trial/start", {{"index", 0}}).status, 409);
  std::this_thread::sleep_for(std::chrono::milliseconds(1100));  // distinct second for the session id
  const auto started = post(port, "/api/session/start", {{"participant", 4}});
  ASSERT_EQ(started.status, 200);

  EXPECT_EQ(post(port, "/api/trial/start", {{"index", 99}}).status, 400);
  EXPECT_EQ(post(port, "/api/trial/start", {{"interface", "immediate"}, {"task", "knot"}, {"level", "easy"}}).status, 400);
  const auto queued = post(port, "/api/trial/start", {{"index", 0}});
  ASSERT_EQ(queued.status, 202);
  EXPECT_EQ(queued.parsed().at("queued"), "start_trial");
  const auto first = condition_schedule(4, Design::within).front();
  const auto running = wait_state(port, [](const json& j) { return !j.at("trial").is_null(); });
  ASSERT_TRUE(running);
  EXPECT_EQ(running->at("trial").at("condition").get<Condition>(), first);
  EXPECT_EQ(running->at("trial").at("seed"), 4001);

  ASSERT_EQ(post(port, "/api/trial/abort").status, 202);
  ASSERT_TRUE(wait_state(port, [](const json& j) { return j.at("trial").is_null(); }));
  const auto results = get(port, "/api/results").parsed();
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].at("status"), "aborted");

  const auto sessions = get(port, "/api/sessions").parsed();
  ASSERT_EQ(sessions.size(), 2u);
  EXPECT_FALSE(sessions[0].at("active").get<bool>());
  EXPECT_TRUE(sessions[1].at("active").get<bool>());
  EXPECT_EQ(sessions[1].at("results"), 1);

  EXPECT_EQ(get(port, "/api/nothing").status, 404);
  EXPECT_EQ(get(port, "/api/sessions/..%2F..%2Fetc/log").status, 404);
  EXPECT_EQ(get(port, "/api/results/none").status, 404);
}

TEST(Service, StaticHosting) {
  const TempDir tmp("static");
  const fs::path& dir = tmp.path;
  fs::create_directories(dir / "ui" / "assets");
  std::ofstream(dir / "ui" / "index.html") << "<html>ui</html>";
  std::ofstream(dir / "ui" / "assets" / "app.js") << "console.log(1)";
  std::ofstream(dir / "secret.txt") << "secret";
  auto cfg = base_config(dir);
  cfg.ui_dir = (dir / "ui").string();
  Running srv(cfg);

  const auto index = get(srv.port(), "/");
  EXPECT_EQ(index.status, 200);
  EXPECT_EQ(index.body, "<html>ui</html>");
  EXPECT_EQ(index.content_type, "text/html");
  const auto js = get(srv.port(), "/assets/app.js");
  EXPECT_EQ(js.body, "console.log(1)");
  EXPECT_EQ(js.content_type, "application/javascript");
  EXPECT_EQ(get(srv.port(), "/assets/missing.js").status, 404);
  EXPECT_EQ(get(srv.port(), "/../secret.txt").status, 400);
  EXPECT_EQ(get(srv.port(), "/%2e%2e/secret.txt").status, 400);
  EXPECT_EQ(post(srv.port(), "/index.html").status, 405);
}

TEST(Service, PlaceholderWithoutUi) {
  const TempDir tmp("placeholder");
  const fs::path& dir = tmp.path;
  Running srv(base_config(dir));
  const auto page = get(srv.port(), "/");
  EXPECT_EQ(page.status, 200);
  EXPECT_NE(page.body.find("<html"), std::string::npos);
  EXPECT_EQ(get(srv.port(), "/app.js").status, 404);
}

TEST(Service, SerialDeviceInput) {
  int master = -1, slave = -1;
  char name[256] = {};
  ASSERT_EQ(openpty(&master, &slave, name, nullptr, nullptr), 0);
  const TempDir tmp("serial");
  const fs::path& dir = tmp.path;
  auto cfg = base_config(dir);
  cfg.serial.device = name;
  cfg.serial.source = InputSource::pedal;
  {
    Running srv(cfg);
    WsClient c(srv.port());
    ASSERT_TRUE(c.read_until([](const json& j) {
      return j.at("type") == "snapshot" && !j.at("hit").is_null() && j.at("hit").at("kind") == "video";
    }));
    const std::string bytes = "\x01garbage\nR1\r\n";
    ASSERT_EQ(::write(master, bytes.data(), bytes.size()), static_cast<ssize_t>(bytes.size()));
    ASSERT_TRUE(c.read_until([](const json& j) { return j.at("type") == "snapshot" && j.at("follow") == true; }));
    const std::string release = "R0\n";
    ASSERT_EQ(::write(master, release.data(), release.size()), 3);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    const auto log = get(srv.port(), "/api/sessions/" + get(srv.port(), "/api/sessions").parsed()[0].at("session").get<std::string>() + "/log");
    EXPECT_NE(log.body.find("\"source\":\"pedal\""), std::string::npos);
  }
  ::close(master);
  ::close(slave);
}

TEST(Service, StartupFailures) {
  const TempDir tmp("fail");
  const fs::path& dir = tmp.path;
  Running first(base_config(dir));
  auto clash = base_config(dir);
  clash.port = first.port();
  service::Server second(clash);
  EXPECT_THROW(second.start(), std::runtime_error);

  auto no_dev = base_config(dir);
  no_dev.serial.device = (dir / "ttyNONE").string();
  service::Server s2(no_dev);
  EXPECT_THROW(s2.start(), ConfigError);

  std::ofstream(dir / "plain") << "x";
  auto not_tty = base_config(dir);
  not_tty.serial.device = (dir / "plain").string();
  service::Server s3(not_tty);
  EXPECT_THROW(s3.start(), std::runtime_error);

  auto bad_bind = base_config(dir);
  bad_bind.bind = "not-an-address";
  service::Server s4(bad_bind);
  EXPECT_THROW(s4.start(), std::runtime_error);
}
