#pragma once

// Two-button input devices (finger ring, foot pedals, keyboard/UI fallback):
// serial line parsing, debouncing, and routing by gaze context.
//
// Serial wire format: 115200 baud 8N1, ASCII lines "L1", "L0", "R1", "R0"
// terminated by '\n' (a trailing '\r' is tolerated). Anything else is noise.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lapgaze/annotation.hpp"
#include "lapgaze/controls.hpp"
#include "lapgaze/image_browser.hpp"
#include "lapgaze/scene.hpp"

namespace lapgaze {

enum class Side { left, right };
enum class Edge { press, release };
enum class InputSource { ring, pedal, keyboard, remote };

inline const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }
inline const char* to_string(Edge e) { return e == Edge::press ? "press" : "release"; }
inline const char* to_string(InputSource s) {
  switch (s) {
    case InputSource::ring: return "ring";
    case InputSource::pedal: return "pedal";
    case InputSource::keyboard: return "keyboard";
    case InputSource::remote: return "remote";
  }
  return "?";
}

struct InputEvent {
  double t = 0.0;  // ms
  Side side = Side::left;
  Edge edge = Edge::press;
  InputSource source = InputSource::remote;

  friend bool operator==(const InputEvent&, const InputEvent&) = default;
};

/// Incremental line scanner for the serial protocol. Keeps partial lines across feeds.
class SerialParser {
 public:
  static constexpr std::size_t kMaxLine = 16;

  explicit SerialParser(InputSource source = InputSource::ring) : source_(source) {}

  std::vector<InputEvent> feed(std::string_view bytes, double t) {
    std::vector<InputEvent> out;
    for (char ch : bytes) {
      if (ch != '\n') {
        if (line_.size() < kMaxLine) line_.push_back(ch);
        else overlong_ = true;
        continue;
      }
      if (auto e = decode(t)) out.push_back(*e);
      else ++noise_;
      line_.clear();
      overlong_ = false;
    }
    return out;
  }

  std::size_t noise() const { return noise_; }
  InputSource source() const { return source_; }

 private:
  std::optional<InputEvent> decode(double t) const {
    std::string_view s = line_;
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    if (overlong_ || s.size() != 2) return std::nullopt;
    InputEvent e{t, Side::left, Edge::press, source_};
    if (s[0] == 'L') e.side = Side::left;
    else if (s[0] == 'R') e.side = Side::right;
    else return std::nullopt;
    if (s[1] == '1') e.edge = Edge::press;
    else if (s[1] == '0') e.edge = Edge::release;
    else return std::nullopt;
    return e;
  }

  InputSource source_;
  std::string line_;
  bool overlong_ = false;
  std::size_t noise_ = 0;
};

/// Per-side edge filter: drops edges within `window_ms` of the last accepted edge on
/// that side, and drops edges that repeat the current button state.
class Debouncer {
 public:
  explicit Debouncer(double window_ms = 20.0) : window_(window_ms) {}

  std::optional<InputEvent> accept(const InputEvent& e) {
    auto& s = sides_[static_cast<std::size_t>(e.side)];
    const bool pressing = e.edge == Edge::press;
    if (pressing == s.down) return std::nullopt;
    if (s.last_t && e.t - *s.last_t < window_) return std::nullopt;
    s.down = pressing;
    s.last_t = e.t;
    return e;
  }

  std::vector<InputEvent> run(const std::vector<InputEvent>& events) {
    std::vector<InputEvent> out;
    for (const auto& e : events)
      if (auto a = accept(e)) out.push_back(*a);
    return out;
  }

  bool down(Side side) const { return sides_[static_cast<std::size_t>(side)].down; }
  double window() const { return window_; }

 private:
  struct SideState {
    bool down = false;
    std::optional<double> last_t;
  };
  double window_;
  std::array<SideState, 2> sides_{};
};

namespace action {
struct Noop {
  std::string reason;
};
struct ToolPress {
  Point at;
};
struct ToolRelease {
  std::optional<Point> at;  // empty when the reticle left the video panel
};
struct VideoControl {
  VideoButton button;
};
struct ToggleFollow {};
struct BrowserPage {
  Page dir;
};
struct BrowserGridPage {
  Page dir;
};
struct BrowserSelect {
  std::size_t cell;
};
struct BrowserBack {};
}  // namespace action

using Action = std::variant<action::Noop, action::ToolPress, action::ToolRelease, action::VideoControl,
                            action::ToggleFollow, action::BrowserPage, action::BrowserGridPage,
                            action::BrowserSelect, action::BrowserBack>;

inline const char* tag(const Action& a) {
  static constexpr const char* names[] = {"noop",          "tool_press",   "tool_release",
                                          "video_control", "toggle_follow", "browser_page",
                                          "browser_grid_page", "browser_select", "browser_back"};
  return names[a.index()];
}

/// Everything routing looks at, captured together with the event.
struct RouteContext {
  std::optional<PanelHit> hit;
  bool tool_busy = false;
  BrowserState::Mode browser_mode = BrowserState::Mode::folder_grid;
  double video_aspect = 1.0;
};

inline RouteContext make_context(const std::optional<PanelHit>& hit, const ToolState& tool,
                                 const BrowserState& browser, double video_aspect) {
  return {hit, is_gesture(tool), browser.mode, video_aspect};
}

/// Maps a debounced edge to an engine action. Source does not matter: ring, pedal and
/// keyboard events with the same side/edge route identically.
inline Action route(const InputEvent& e, const RouteContext& ctx) {
  const bool on_video = ctx.hit && ctx.hit->kind == PanelKind::video;
  const bool on_image = ctx.hit && ctx.hit->kind == PanelKind::image;
  auto video_point = [&] { return Point{ctx.hit->uv.u * ctx.video_aspect, ctx.hit->uv.v}; };

  if (e.side == Side::left && e.edge == Edge::release) {
    if (!ctx.tool_busy) return action::Noop{"left release outside a gesture"};
    if (on_video) return action::ToolRelease{video_point()};
    return action::ToolRelease{std::nullopt};
  }
  if (e.edge == Edge::release) return action::Noop{"right release"};

  if (e.side == Side::left) {
    if (on_video) {
      if (ctx.tool_busy) return action::ToolPress{video_point()};  // rejected downstream as duplicate
      if (auto b = VideoControls::button_at(ctx.hit->uv)) return action::VideoControl{*b};
      return action::ToolPress{video_point()};
    }
    if (on_image) {
      const bool full = ctx.browser_mode == BrowserState::Mode::full_image;
      return std::visit(
          [&](const auto& t) -> Action {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, image_target::Back>) return action::BrowserBack{};
            else if constexpr (std::is_same_v<T, image_target::GridPrev>) return action::BrowserGridPage{Page::prev};
            else if constexpr (std::is_same_v<T, image_target::GridNext>) return action::BrowserGridPage{Page::next};
            else if constexpr (std::is_same_v<T, image_target::Cell>) return action::BrowserSelect{t.index};
            else if constexpr (std::is_same_v<T, image_target::Picture>) return action::BrowserPage{Page::prev};
            else return action::Noop{"left press on empty image bar"};
          },
          ImageControls::target_at(ctx.hit->uv, full));
    }
    if (ctx.hit) return action::Noop{"help panels are display only"};
    return action::Noop{"left press off panels"};
  }

  // right press
  if (on_video) return action::ToggleFollow{};
  if (on_image && ctx.browser_mode == BrowserState::Mode::full_image &&
      std::holds_alternative<image_target::Picture>(ImageControls::target_at(ctx.hit->uv, true)))
    return action::BrowserPage{Page::next};
  if (ctx.hit && !on_image) return action::Noop{"help panels are display only"};
  return action::Noop{"right press without a target"};
}

inline void to_json(nlohmann::json& j, const InputEvent& e) {
  j = {{"t", e.t}, {"side", to_string(e.side)}, {"edge", to_string(e.edge)}, {"source", to_string(e.source)}};
}

inline void from_json(const nlohmann::json& j, InputEvent& e) {
  e.t = j.at("t").get<double>();
  const std::string side = j.at("side").get<std::string>();
  const std::string edge = j.at("edge").get<std::string>();
  const std::string source = j.value("source", std::string("remote"));
  if (side == "left") e.side = Side::left;
  else if (side == "right") e.side = Side::right;
  else throw nlohmann::json::other_error::create(501, "unknown side '" + side + "'", &j);
  if (edge == "press") e.edge = Edge::press;
  else if (edge == "release") e.edge = Edge::release;
  else throw nlohmann::json::other_error::create(501, "unknown edge '" + edge + "'", &j);
  if (source == "ring") e.source = InputSource::ring;
  else if (source == "pedal") e.source = InputSource::pedal;
  else if (source == "keyboard") e.source = InputSource::keyboard;
  else if (source == "remote") e.source = InputSource::remote;
  else throw nlohmann::json::other_error::create(501, "unknown source '" + source + "'", &j);
}

}  // namespace lapgaze
