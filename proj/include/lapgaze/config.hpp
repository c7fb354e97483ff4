#pragma once

// Service configuration: one JSON document. Engine keys sit at the top level next to
// the service keys; every key is optional.
//
//   {
//     "filter": "immediate" | "average-<n>" | "scaled-<r>",
//     "layout": {"distance": 1.5, "video_deg": [28, 18], "image_deg": [28, 12],
//                "help_deg": [12, 18], "gap_deg": 1.5},
//     "annotation": {"pick_radius": 0.02, "min_spacing": 0.004, "zero_length": 0.005},
//     "debounce_ms": 20,
//     "tasks": {"peg_rings": [4, 6, 8], "thread_holes": [3, 5, 7], "min_separation": 0.08, ...},
//     "scoring": {"match_threshold": 0.05, "arrow_angle_deg": 30},
//     "serial": {"device": "/dev/ttyUSB0" | null, "baud": 115200, "source": "ring" | "pedal"},
//     "image_root": "images", "output_dir": "lapgaze-out", "ui_dir": "ui/dist",
//     "tick_hz": 60, "design": "within" | "between_task", "bind": "127.0.0.1", "port": 8080
//   }

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "lapgaze/engine.hpp"

namespace lapgaze {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SerialConfig {
  std::optional<std::string> device;
  unsigned baud = 115200;
  InputSource source = InputSource::ring;
};

struct SessionConfig {
  EngineConfig engine;
  SerialConfig serial;
  std::string image_root;  // empty: no image folders besides task and capture folders
  std::string output_dir = "lapgaze-out";
  std::string ui_dir;      // empty: placeholder page
  double tick_hz = 60.0;
  Design design = Design::within;
  std::string bind = "127.0.0.1";
  unsigned short port = 8080;
};

inline void to_json(nlohmann::json& j, const SessionConfig& c) {
  j = c.engine;
  j["serial"] = {{"device", c.serial.device ? nlohmann::json(*c.serial.device) : nlohmann::json()},
                 {"baud", c.serial.baud},
                 {"source", to_string(c.serial.source)}};
  j["image_root"] = c.image_root;
  j["output_dir"] = c.output_dir;
  j["ui_dir"] = c.ui_dir;
  j["tick_hz"] = c.tick_hz;
  j["design"] = to_string(c.design);
  j["bind"] = c.bind;
  j["port"] = c.port;
}

/// Parses and range-checks; does not touch the filesystem (see validate_paths).
inline SessionConfig parse_config(const nlohmann::json& j) {
  static const std::set<std::string> known{"filter", "layout", "annotation", "debounce_ms", "tasks",
                                           "scoring", "serial", "image_root", "output_dir", "ui_dir",
                                           "tick_hz", "design", "bind", "port"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  SessionConfig c;
  try {
    c.engine = j.get<EngineConfig>();
    if (j.contains("serial")) {
      const auto& s = j.at("serial");
      if (s.contains("device") && !s.at("device").is_null()) c.serial.device = s.at("device").get<std::string>();
      c.serial.baud = s.value("baud", c.serial.baud);
      const std::string src = s.value("source", std::string("ring"));
      if (src == "ring") c.serial.source = InputSource::ring;
      else if (src == "pedal") c.serial.source = InputSource::pedal;
      else throw ConfigError("serial.source must be ring or pedal");
    }
    c.image_root = j.value("image_root", c.image_root);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.ui_dir = j.value("ui_dir", c.ui_dir);
    c.tick_hz = j.value("tick_hz", c.tick_hz);
    if (j.contains("design")) c.design = design_from(j.at("design").get<std::string>());
    c.bind = j.value("bind", c.bind);
    if (j.contains("port")) {
      const int port = j.at("port").get<int>();
      if (port < 0 || port > 65535) throw ConfigError("port out of range");
      c.port = static_cast<unsigned short>(port);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (!(c.tick_hz >= 10.0 && c.tick_hz <= 240.0))
    throw ConfigError("tick_hz must lie in [10, 240], got " + std::to_string(c.tick_hz));
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  return c;
}

inline SessionConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

/// Startup checks: input directories exist, output directory is creatable.
inline void validate_paths(const SessionConfig& c) {
  namespace fs = std::filesystem;
  if (!c.image_root.empty() && !fs::is_directory(c.image_root))
    throw ConfigError("image_root '" + c.image_root + "' is not a directory");
  if (!c.ui_dir.empty() && !fs::is_directory(c.ui_dir))
    throw ConfigError("ui_dir '" + c.ui_dir + "' is not a directory");
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec || !fs::is_directory(c.output_dir))
    throw ConfigError("cannot create output_dir '" + c.output_dir + "': " + ec.message());
  if (c.serial.device && !fs::exists(*c.serial.device))
    throw ConfigError("serial device '" + *c.serial.device + "' does not exist");
}

}  // namespace lapgaze
