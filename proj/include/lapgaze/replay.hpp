#pragma once

// Rebuilds a session from its event log.
//
// Log format: JSON Lines. Line 1 is the header
//   {"t":0,"type":"header","payload":{"format":"lapgaze-session","version":1,
//    "session":..., "config":..., "library":[...], "initial_head":{...}}}
// followed by inbound lines (gaze | input | control, each with "tick") that drive
// the engine, derived lines (action, capture, trial_start, trial_end, debounced,
// warning, error) that replay recomputes, and a final {"type":"end","tick":N}.

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lapgaze/engine.hpp"

namespace lapgaze {

class LogVersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReplayIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ReplayResult {
  std::vector<StateSnapshot> snapshots;
  std::vector<ReplayIssue> issues;
  std::vector<TrialResult> results;
  std::vector<std::string> log;  // the log the replayed engine wrote
  std::optional<StateSnapshot> final_state;
};

struct LogHeader {
  std::string session;
  EngineConfig config;
  ImageLibrary library;
  Direction initial_head;
};

inline LogHeader parse_header(const nlohmann::json& line) {
  if (line.value("type", std::string()) != "header") throw LogVersionError("first log line is not a header");
  const auto& p = line.at("payload");
  if (p.value("format", std::string()) != kLogFormat) throw LogVersionError("not a lapgaze session log");
  const int version = p.value("version", -1);
  if (version != kLogVersion)
    throw LogVersionError("log version " + std::to_string(version) + " not supported (expected " +
                          std::to_string(kLogVersion) + ")");
  LogHeader h;
  h.session = p.at("session").get<std::string>();
  h.config = p.at("config").get<EngineConfig>();
  h.library = ImageLibrary(p.at("library").get<std::vector<Folder>>());
  h.initial_head = p.at("initial_head").get<Direction>();
  return h;
}

/// Replays log lines. Malformed lines are reported and skipped; an unsupported
/// header throws LogVersionError. An empty log gives an empty result.
inline ReplayResult replay(const std::vector<std::string>& lines, bool keep_snapshots = true) {
  ReplayResult out;
  std::size_t first = 0;
  while (first < lines.size() && lines[first].empty()) ++first;
  if (first == lines.size()) return out;

  nlohmann::json head_line;
  try {
    head_line = nlohmann::json::parse(lines[first]);
  } catch (const nlohmann::json::exception& e) {
    throw LogVersionError(std::string("unreadable header: ") + e.what());
  }
  const LogHeader h = parse_header(head_line);
  Engine eng(h.config, h.library, h.session, h.initial_head);
  eng.open_log();

  std::optional<std::uint64_t> end_tick;
  auto advance_to = [&](std::uint64_t tick) {
    while (eng.tick_id() < tick) {
      StateSnapshot s = eng.tick();
      if (keep_snapshots) out.snapshots.push_back(std::move(s));
    }
  };

  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      const std::string type = j.at("type").get<std::string>();
      if (type == "gaze" || type == "input" || type == "control") {
        const auto tick = j.at("tick").get<std::uint64_t>();
        if (tick <= eng.tick_id()) throw std::invalid_argument("tick " + std::to_string(tick) + " is in the past");
        Inbound m = parse_inbound(type, j.at("payload"));
        advance_to(tick - 1);
        eng.submit(std::move(m));
      } else if (type == "end") {
        end_tick = j.at("tick").get<std::uint64_t>();
      } else if (type == "header") {
        throw std::invalid_argument("second header");
      }
      // everything else is derived and recomputed
    } catch (const std::exception& e) {
      out.issues.push_back({line_no, e.what()});
    }
  }
  if (eng.pending() > 0) advance_to(eng.tick_id() + 1);
  if (end_tick) advance_to(*end_tick);
  eng.close_log();
  out.results = eng.results();
  out.log = eng.log_lines();
  out.final_state = eng.snapshot();
  return out;
}

inline ReplayResult replay(std::istream& in, bool keep_snapshots = true) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return replay(lines, keep_snapshots);
}

}  // namespace lapgaze
