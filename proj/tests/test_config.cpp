#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "lapgaze/config.hpp"

using namespace lapgaze;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lapgaze-config-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, DefaultsFromEmptyObject) {
  const auto c = parse_config(nlohmann::json::object());
  EXPECT_EQ(c.engine.filter, FilterMode::immediate());
  EXPECT_EQ(c.tick_hz, 60.0);
  EXPECT_EQ(c.port, 8080);
  EXPECT_EQ(c.bind, "127.0.0.1");
  EXPECT_FALSE(c.serial.device);
  EXPECT_EQ(c.design, Design::within);
}

TEST(Config, FullDocument) {
  const auto j = nlohmann::json::parse(R"({
    "filter": "average-30", "debounce_ms": 25,
    "layout": {"distance": 2.0, "video_deg": [30, 20]},
    "scoring": {"match_threshold": 0.04, "arrow_angle_deg": 25},
    "serial": {"device": "/dev/ttyUSB0", "baud": 9600, "source": "pedal"},
    "image_root": "imgs", "output_dir": "out", "ui_dir": "ui",
    "tick_hz": 90, "design": "between_task", "bind": "0.0.0.0", "port": 0
  })");
  const auto c = parse_config(j);
  EXPECT_EQ(c.engine.filter, FilterMode::average(30));
  EXPECT_EQ(c.engine.debounce_ms, 25);
  EXPECT_EQ(c.engine.layout.distance, 2.0);
  EXPECT_EQ(c.engine.layout.video_w_deg, 30);
  EXPECT_EQ(c.engine.scoring.match_threshold, 0.04);
  EXPECT_EQ(c.serial.device, "/dev/ttyUSB0");
  EXPECT_EQ(c.serial.baud, 9600u);
  EXPECT_EQ(c.serial.source, InputSource::pedal);
  EXPECT_EQ(c.tick_hz, 90);
  EXPECT_EQ(c.design, Design::between_task);
  EXPECT_EQ(c.port, 0);
  // serialization round-trips
  EXPECT_EQ(nlohmann::json(parse_config(nlohmann::json(c))), nlohmann::json(c));
}

TEST(Config, RejectsBadValues) {
  for (const char* bad : {R"({"tick_hz": 5})", R"({"tick_hz": 500})", R"({"filter": "average-0"})",
                          R"({"filter": "scaled-2"})", R"({"colour": "red"})", R"({"port": 70000})",
                          R"({"serial": {"source": "mouse"}})", R"({"design": "mixed"})", R"({"output_dir": ""})",
                          R"({"debounce_ms": "fast"})", R"([1, 2])"}) {
    EXPECT_THROW(parse_config(nlohmann::json::parse(bad)), ConfigError) << bad;
  }
}

TEST(Config, LoadFromFile) {
  const auto dir = temp_dir("load");
  std::ofstream(dir / "good.json") << R"({"filter": "scaled-0.5", "port": 9001})";
  std::ofstream(dir / "broken.json") << R"({"filter": )";
  const auto c = load_config(dir / "good.json");
  EXPECT_EQ(c.engine.filter, FilterMode::scaled(0.5));
  EXPECT_EQ(c.port, 9001);
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(Config, ValidatePaths) {
  const auto dir = temp_dir("paths");
  SessionConfig c;
  c.output_dir = (dir / "out" / "nested").string();
  EXPECT_NO_THROW(validate_paths(c));
  EXPECT_TRUE(fs::is_directory(c.output_dir));

  c.image_root = (dir / "nope").string();
  EXPECT_THROW(validate_paths(c), ConfigError);
  c.image_root.clear();
  c.ui_dir = (dir / "nope").string();
  EXPECT_THROW(validate_paths(c), ConfigError);
  c.ui_dir.clear();
  c.serial.device = (dir / "ttyNOPE").string();
  EXPECT_THROW(validate_paths(c), ConfigError);
  c.serial.device.reset();
  std::ofstream(dir / "file") << "x";
  c.output_dir = (dir / "file").string();
  EXPECT_THROW(validate_paths(c), ConfigError);
  fs::remove_all(dir);
}
