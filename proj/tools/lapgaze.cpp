#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "lapgaze/config.hpp"
#include "lapgaze/harness.hpp"
#include "lapgaze/replay.hpp"
#include "lapgaze/service.hpp"

namespace fs = std::filesystem;
using namespace lapgaze;

namespace {

service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

Condition parse_condition(const std::string& label) {
  // interface/task-level, e.g. "scaled-0.5/peg-easy"
  const auto slash = label.find('/');
  const auto dash = label.rfind('-');
  if (slash == std::string::npos || dash == std::string::npos || dash < slash)
    throw std::invalid_argument("condition must look like immediate/peg-easy, got '" + label + "'");
  Condition c;
  c.interface = FilterMode::parse(label.substr(0, slash));
  c.kind = task_kind_from(label.substr(slash + 1, dash - slash - 1));
  c.level = level_from(label.substr(dash + 1));
  return c;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

int run_headless(const SessionConfig& cfg, const std::string& script_path, const std::string& perfect,
                 std::uint64_t seed, const std::string& out_dir) {
  ScriptedTrial script;
  if (!script_path.empty()) {
    std::ifstream in(script_path);
    if (!in) throw std::runtime_error("cannot open script " + script_path);
    script = nlohmann::json::parse(in).get<ScriptedTrial>();
  } else {
    script = perfect_user_script(parse_condition(perfect), seed, cfg.engine);
  }
  const TrialRun run = run_scripted_trial(script, cfg.engine);
  const std::string result = nlohmann::json(run.result).dump(2);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "result.json", result + "\n");
    std::string log;
    for (const auto& line : run.log) log += line + "\n";
    write_text(fs::path(out_dir) / "log.jsonl", log);
    write_text(fs::path(out_dir) / "results.csv", results_csv({run.result}));
    if (script_path.empty()) write_text(fs::path(out_dir) / "script.json", nlohmann::json(script).dump() + "\n");
  }
  std::cout << result << '\n';
  return run.result.status == "completed" ? 0 : 3;
}

int run_replay(const std::string& path, const std::string& out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log " + path);
  const ReplayResult r = replay(in, false);
  for (const auto& issue : r.issues) std::cerr << path << ":" << issue.line << ": " << issue.message << '\n';
  const std::string state = r.final_state ? nlohmann::json(*r.final_state).dump() : "null";
  if (out.empty()) std::cout << state << '\n';
  else write_text(out, state + "\n");
  std::cerr << "replayed " << (r.final_state ? r.final_state->tick : 0) << " ticks, " << r.results.size()
            << " trial results, " << r.issues.size() << " skipped lines\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lapgaze: head-gaze annotation engine and study service"};
  std::string config_path, replay_path, script_path, perfect, out;
  int port = -1;
  bool headless = false;
  std::uint64_t seed = 1;
  int schedule_for = -1;
  app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("-p,--port", port, "Listen port (overrides config; 0 picks a free port)")->check(CLI::Range(0, 65535));
  app.add_flag("--headless", headless, "Run one scripted trial without the network service");
  app.add_option("--script", script_path, "Scripted trial JSON (gaze trace + input script)")->check(CLI::ExistingFile);
  app.add_option("--perfect-user", perfect, "Generate a perfect-user script for a condition, e.g. scaled-0.5/peg-easy");
  app.add_option("--seed", seed, "Task seed for --perfect-user");
  app.add_option("--replay", replay_path, "Replay a session log and print the final state")->check(CLI::ExistingFile);
  app.add_option("-o,--out", out, "Output directory (headless) or file (replay)");
  app.add_option("--schedule", schedule_for, "Print the condition schedule for a participant id");
  CLI11_PARSE(app, argc, argv);

  try {
    SessionConfig cfg = config_path.empty() ? SessionConfig{} : load_config(config_path);
    if (port >= 0) cfg.port = static_cast<unsigned short>(port);

    if (!replay_path.empty()) return run_replay(replay_path, out);
    if (schedule_for >= 0) {
      std::cout << nlohmann::json(condition_schedule(schedule_for, cfg.design)).dump(2) << '\n';
      return 0;
    }
    if (headless) {
      if (script_path.empty() == perfect.empty()) {
        std::cerr << "--headless needs exactly one of --script or --perfect-user\n";
        return 2;
      }
      return run_headless(cfg, script_path, perfect, seed, out);
    }

    service::Server server(cfg);
    server.start();
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "lapgaze listening on http://" << cfg.bind << ":" << server.port() << "/ (ws at /ws)\n";
    server.run();
    g_server = nullptr;
    return 0;
  } catch (const LogVersionError& e) {
    std::cerr << "lapgaze: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "lapgaze: " << e.what() << '\n';
    return 1;
  }
}
