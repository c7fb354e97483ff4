#pragma once

// Annotation tool for the video panel.
//
// Markers (line, arrow, circle) are created by press-drag-release and edited by
// grabbing one of their two handles; free sketches are ink strokes recorded while
// the button is held. All geometry lives in aspect-corrected panel coordinates
// (x = u * aspect, y = v) so circles are round on screen.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lapgaze/geometry.hpp"
#include "lapgaze/outcome.hpp"
#include "lapgaze/raster.hpp"

namespace lapgaze {

enum class MarkerKind { line, arrow, circle };
enum class ToolKind { line, arrow, circle, sketch };
enum class Handle { line_p1, line_p2, arrow_head, arrow_tail, circle_center, circle_radius };

inline const char* to_string(MarkerKind k) {
  switch (k) {
    case MarkerKind::line: return "line";
    case MarkerKind::arrow: return "arrow";
    case MarkerKind::circle: return "circle";
  }
  return "?";
}

inline const char* to_string(ToolKind k) {
  switch (k) {
    case ToolKind::line: return "line";
    case ToolKind::arrow: return "arrow";
    case ToolKind::circle: return "circle";
    case ToolKind::sketch: return "sketch";
  }
  return "?";
}

inline const char* to_string(Handle h) {
  switch (h) {
    case Handle::line_p1: return "line_p1";
    case Handle::line_p2: return "line_p2";
    case Handle::arrow_head: return "arrow_head";
    case Handle::arrow_tail: return "arrow_tail";
    case Handle::circle_center: return "circle_center";
    case Handle::circle_radius: return "circle_radius";
  }
  return "?";
}

inline std::optional<ToolKind> tool_kind_from(std::string_view s) {
  for (ToolKind k : {ToolKind::line, ToolKind::arrow, ToolKind::circle, ToolKind::sketch})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

inline std::optional<Handle> handle_from(std::string_view s) {
  for (Handle h : {Handle::line_p1, Handle::line_p2, Handle::arrow_head, Handle::arrow_tail,
                   Handle::circle_center, Handle::circle_radius})
    if (s == to_string(h)) return h;
  return std::nullopt;
}

inline std::array<Handle, 2> handles_of(MarkerKind k) {
  switch (k) {
    case MarkerKind::line: return {Handle::line_p1, Handle::line_p2};
    case MarkerKind::arrow: return {Handle::arrow_head, Handle::arrow_tail};
    case MarkerKind::circle: return {Handle::circle_center, Handle::circle_radius};
  }
  return {};
}

/// Two-point marker. `first` is p1 / arrowhead / center, `second` is p2 / tail / radius point.
struct Marker {
  int id = 0;
  MarkerKind kind = MarkerKind::line;
  Point first;
  Point second;
  bool reference = false;  // pre-placed by a trial; not editable, survives clear_markers

  double length() const { return distance(first, second); }
  double radius() const { return length(); }

  Point handle_point(Handle h) const { return h == handles_of(kind)[0] ? first : second; }

  friend bool operator==(const Marker&, const Marker&) = default;
};

struct SketchStroke {
  int id = 0;
  std::vector<Point> points;

  friend bool operator==(const SketchStroke&, const SketchStroke&) = default;
};

struct AnnotationLayer {
  std::vector<Marker> markers;
  std::vector<SketchStroke> strokes;

  bool empty() const { return markers.empty() && strokes.empty(); }
  const Marker* find(int id) const {
    for (const auto& m : markers)
      if (m.id == id) return &m;
    return nullptr;
  }

  friend bool operator==(const AnnotationLayer&, const AnnotationLayer&) = default;
};

namespace tool {
struct Idle {
  friend bool operator==(const Idle&, const Idle&) = default;
};
struct MenuOpen {
  friend bool operator==(const MenuOpen&, const MenuOpen&) = default;
};
struct Armed {
  ToolKind kind;
  friend bool operator==(const Armed&, const Armed&) = default;
};
struct DraggingCreate {
  ToolKind kind;
  Point anchor;
  Point current;
  friend bool operator==(const DraggingCreate&, const DraggingCreate&) = default;
};
struct DraggingEdit {
  int marker_id;
  Handle handle;
  Marker original;
  friend bool operator==(const DraggingEdit&, const DraggingEdit&) = default;
};
struct Sketching {
  int stroke_id;
  std::vector<Point> points;
  friend bool operator==(const Sketching&, const Sketching&) = default;
};
}  // namespace tool

using ToolState = std::variant<tool::Idle, tool::MenuOpen, tool::Armed, tool::DraggingCreate,
                               tool::DraggingEdit, tool::Sketching>;

inline const char* tag(const ToolState& s) {
  static constexpr const char* names[] = {"idle",         "menu_open",    "armed",
                                          "dragging_create", "dragging_edit", "sketching"};
  return names[s.index()];
}

/// True between a left press and its matching release.
inline bool is_gesture(const ToolState& s) {
  return std::holds_alternative<tool::DraggingCreate>(s) ||
         std::holds_alternative<tool::DraggingEdit>(s) || std::holds_alternative<tool::Sketching>(s);
}

struct AnnotationParams {
  double pick_radius = 0.02;
  double min_spacing = 0.004;
  double zero_length = 0.005;
};

/// Circular four-slice marker menu, gaze-selected. Slices run clockwise from the top.
struct MarkerMenu {
  Point center;
  double inner_radius = 0.04;
  double outer_radius = 0.2;

  static constexpr std::array<ToolKind, 4> kOptions{ToolKind::line, ToolKind::arrow,
                                                   ToolKind::circle, ToolKind::sketch};

  std::optional<ToolKind> slice_at(Point p) const {
    const Point d = p - center;
    const double r = std::hypot(d.x, d.y);
    if (r < inner_radius || r > outer_radius) return std::nullopt;
    double a = std::atan2(d.x, -d.y);  // 0 = up, clockwise positive (y grows downward)
    if (a < 0) a += 2.0 * kPi;
    const int slice = static_cast<int>(std::floor((a + kPi / 4.0) / (kPi / 2.0))) % 4;
    return kOptions[static_cast<std::size_t>(slice)];
  }

  Point slice_center(ToolKind k) const {
    std::size_t i = 0;
    while (kOptions[i] != k) ++i;
    const double a = static_cast<double>(i) * kPi / 2.0;
    const double r = 0.5 * (inner_radius + outer_radius);
    return {center.x + r * std::sin(a), center.y - r * std::cos(a)};
  }
};

struct CaptureRecord {
  int id = 0;
  double t = 0.0;
  AnnotationLayer layer;
  std::optional<std::string> frame_ref;
  std::optional<Image> composite;  // only when a frame was supplied
};

/// Draws committed markers and strokes over `frame`. Pixel scale maps y in [0, 1] onto
/// the frame height and x in [0, aspect] onto its width.
inline void rasterize(const AnnotationLayer& layer, double aspect, Image& frame) {
  const double sx = frame.width() / aspect;
  const double sy = frame.height();
  const double sr = 0.5 * (sx + sy);
  auto px = [&](Point p) { return std::pair{p.x * sx, p.y * sy}; };
  for (const auto& m : layer.markers) {
    const Rgb color = m.reference ? kReferenceGreen : kMarkerRed;
    const auto [ax, ay] = px(m.first);
    const auto [bx, by] = px(m.second);
    switch (m.kind) {
      case MarkerKind::line: draw_line(frame, ax, ay, bx, by, color); break;
      case MarkerKind::arrow: draw_arrow(frame, ax, ay, bx, by, 0.03 * sr, color); break;
      case MarkerKind::circle: draw_circle(frame, ax, ay, m.radius() * sr, color); break;
    }
  }
  for (const auto& s : layer.strokes)
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      const auto [ax, ay] = px(s.points[i - 1]);
      const auto [bx, by] = px(s.points[i]);
      draw_line(frame, ax, ay, bx, by, kSketchYellow);
    }
}

class AnnotationTool {
 public:
  explicit AnnotationTool(double aspect, AnnotationParams params = {})
      : aspect_(aspect), params_(params) {
    menu_.center = {aspect / 2.0, 0.45};
  }

  const ToolState& state() const { return state_; }
  const AnnotationLayer& layer() const { return layer_; }
  const AnnotationParams& params() const { return params_; }
  const MarkerMenu& menu() const { return menu_; }
  double aspect() const { return aspect_; }
  int next_id() const { return next_id_; }
  bool busy() const { return is_gesture(state_); }

  Point clamp(Point p) const {
    return {std::clamp(p.x, 0.0, aspect_), std::clamp(p.y, 0.0, 1.0)};
  }

  Outcome open_menu() {
    if (busy()) return Outcome::rejected("menu unavailable during a gesture");
    if (std::holds_alternative<tool::MenuOpen>(state_)) return Outcome::ignored("menu already open");
    state_ = tool::MenuOpen{};
    return Outcome::applied();
  }

  Outcome close_menu() {
    if (!std::holds_alternative<tool::MenuOpen>(state_)) return Outcome::ignored("menu not open");
    state_ = tool::Idle{};
    return Outcome::applied();
  }

  Outcome choose_kind(ToolKind kind) {
    if (!std::holds_alternative<tool::MenuOpen>(state_))
      return Outcome::rejected("choose_kind requires an open menu");
    state_ = tool::Armed{kind};
    return Outcome::applied();
  }

  /// Left press at `raw` on the video content area.
  Outcome press(Point raw) {
    const Point p = clamp(raw);
    return std::visit(
        [&](auto& s) -> Outcome {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, tool::MenuOpen>) {
            if (auto k = menu_.slice_at(p)) return choose_kind(*k);
            state_ = tool::Idle{};
            return Outcome::applied("menu dismissed");
          } else if constexpr (std::is_same_v<S, tool::Armed>) {
            if (s.kind == ToolKind::sketch) {
              state_ = tool::Sketching{next_id_++, {p}};
            } else {
              state_ = tool::DraggingCreate{s.kind, p, p};
            }
            return Outcome::applied();
          } else if constexpr (std::is_same_v<S, tool::Idle>) {
            auto hit = pick(p);
            if (!hit) return Outcome::ignored("press on empty video area");
            state_ = tool::DraggingEdit{hit->first, hit->second, *layer_.find(hit->first)};
            return Outcome::applied();
          } else {
            return Outcome::ignored("duplicate press during gesture");
          }
        },
        state_);
  }

  Outcome drag(Point raw) {
    const Point p = clamp(raw);
    if (auto* c = std::get_if<tool::DraggingCreate>(&state_)) {
      c->current = p;
      return Outcome::applied();
    }
    if (auto* s = std::get_if<tool::Sketching>(&state_)) {
      if (distance(s->points.back(), p) >= params_.min_spacing) s->points.push_back(p);
      return Outcome::applied();
    }
    if (auto* e = std::get_if<tool::DraggingEdit>(&state_)) {
      if (Marker* m = find_mut(e->marker_id)) *m = edited(e->original, e->handle, p);
      return Outcome::applied();
    }
    return Outcome::ignored("drag outside a gesture");
  }

  /// Left release. Returns the committed marker/stroke id through `committed` when one is made.
  Outcome release(Point raw, std::optional<int>* committed = nullptr) {
    const Point p = clamp(raw);
    if (auto* c = std::get_if<tool::DraggingCreate>(&state_)) {
      const ToolKind kind = c->kind;
      const Point anchor = c->anchor;
      state_ = tool::Armed{kind};
      if (distance(anchor, p) < params_.zero_length)
        return Outcome::ignored("zero-length marker discarded");
      Marker m{next_id_++, static_cast<MarkerKind>(kind), anchor, p, false};
      layer_.markers.push_back(m);
      if (committed) *committed = m.id;
      return Outcome::applied();
    }
    if (auto* s = std::get_if<tool::Sketching>(&state_)) {
      SketchStroke stroke{s->stroke_id, std::move(s->points)};
      if (distance(stroke.points.back(), p) >= params_.min_spacing) stroke.points.push_back(p);
      state_ = tool::Armed{ToolKind::sketch};
      if (stroke.points.size() < 2) return Outcome::ignored("sketch too short, discarded");
      if (committed) *committed = stroke.id;
      layer_.strokes.push_back(std::move(stroke));
      return Outcome::applied();
    }
    if (auto* e = std::get_if<tool::DraggingEdit>(&state_)) {
      const tool::DraggingEdit edit = *e;
      state_ = tool::Idle{};
      Marker* m = find_mut(edit.marker_id);
      if (!m) return Outcome::ignored("edited marker no longer exists");
      const Marker next = edited(edit.original, edit.handle, p);
      if (next.length() < params_.zero_length) {
        *m = edit.original;
        return Outcome::ignored("degenerate edit reverted");
      }
      *m = next;
      if (committed) *committed = m->id;
      return Outcome::applied();
    }
    return Outcome::rejected("release without press");
  }

  /// Nearest editable handle within the pick radius.
  std::optional<std::pair<int, Handle>> pick(Point p) const {
    std::optional<std::pair<int, Handle>> best;
    double best_d = params_.pick_radius;
    for (const auto& m : layer_.markers) {
      if (m.reference) continue;
      for (Handle h : handles_of(m.kind)) {
        const double d = distance(m.handle_point(h), p);
        if (d < best_d || (d == best_d && !best)) {
          best_d = d;
          best = {m.id, h};
        }
      }
    }
    return best;
  }

  /// Removes every non-reference marker; strokes are kept.
  void clear_markers() {
    std::erase_if(layer_.markers, [](const Marker& m) { return !m.reference; });
    if (auto* e = std::get_if<tool::DraggingEdit>(&state_); e && !layer_.find(e->marker_id))
      state_ = tool::Idle{};
  }

  void clear_sketch() {
    layer_.strokes.clear();
    if (std::holds_alternative<tool::Sketching>(state_)) state_ = tool::Armed{ToolKind::sketch};
  }

  CaptureRecord screenshot(double t, std::optional<std::string> frame_ref = std::nullopt,
                           const Image* frame = nullptr) {
    CaptureRecord rec{next_capture_++, t, layer_, std::move(frame_ref), std::nullopt};
    if (frame) {
      Image composite = *frame;
      rasterize(layer_, aspect_, composite);
      rec.composite = std::move(composite);
    }
    return rec;
  }

  int add_reference_circle(Point center, double radius) {
    Marker m{next_id_++, MarkerKind::circle, center, clamp({center.x + radius, center.y}), true};
    layer_.markers.push_back(m);
    return m.id;
  }

  /// Empties the layer and returns to Idle; id counters keep running.
  void reset() {
    layer_ = {};
    state_ = tool::Idle{};
  }

  void restore(AnnotationLayer layer, ToolState state, int next_id, int next_capture) {
    layer_ = std::move(layer);
    state_ = std::move(state);
    next_id_ = next_id;
    next_capture_ = next_capture;
  }
  int next_capture() const { return next_capture_; }

 private:
  Marker* find_mut(int id) {
    for (auto& m : layer_.markers)
      if (m.id == id) return &m;
    return nullptr;
  }

  Marker edited(const Marker& original, Handle h, Point p) const {
    Marker m = original;
    if (h == Handle::circle_center) {
      m.first = p;
      m.second = clamp(p + (original.second - original.first));
    } else if (h == handles_of(m.kind)[0]) {
      m.first = p;
    } else {
      m.second = p;
    }
    return m;
  }

  double aspect_;
  AnnotationParams params_;
  MarkerMenu menu_;
  ToolState state_ = tool::Idle{};
  AnnotationLayer layer_;
  int next_id_ = 1;
  int next_capture_ = 1;
};

// JSON schema
//   point:   [x, y]
//   marker:  {"id", "kind": "line"|"arrow"|"circle", then p1/p2 | head/tail | center/radius_point,
//             optional "reference": true}
//   stroke:  {"id", "points": [[x, y], ...]}
//   layer:   {"markers": [...], "strokes": [...]}

inline void to_json(nlohmann::json& j, const Point& p) { j = nlohmann::json::array({p.x, p.y}); }
inline void from_json(const nlohmann::json& j, Point& p) {
  if (!j.is_array() || j.size() != 2) throw nlohmann::json::type_error::create(302, "point must be [x, y]", &j);
  p = {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline std::array<const char*, 2> point_names(MarkerKind k) {
  switch (k) {
    case MarkerKind::line: return {"p1", "p2"};
    case MarkerKind::arrow: return {"head", "tail"};
    case MarkerKind::circle: return {"center", "radius_point"};
  }
  return {"", ""};
}

inline void to_json(nlohmann::json& j, const Marker& m) {
  const auto names = point_names(m.kind);
  j = {{"id", m.id}, {"kind", to_string(m.kind)}, {names[0], m.first}, {names[1], m.second}};
  if (m.reference) j["reference"] = true;
}

inline void from_json(const nlohmann::json& j, Marker& m) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "line") m.kind = MarkerKind::line;
  else if (kind == "arrow") m.kind = MarkerKind::arrow;
  else if (kind == "circle") m.kind = MarkerKind::circle;
  else throw nlohmann::json::other_error::create(501, "unknown marker kind '" + kind + "'", &j);
  const auto names = point_names(m.kind);
  m.id = j.at("id").get<int>();
  m.first = j.at(names[0]).get<Point>();
  m.second = j.at(names[1]).get<Point>();
  m.reference = j.value("reference", false);
}

inline void to_json(nlohmann::json& j, const SketchStroke& s) {
  j = {{"id", s.id}, {"points", s.points}};
}
inline void from_json(const nlohmann::json& j, SketchStroke& s) {
  s.id = j.at("id").get<int>();
  s.points = j.at("points").get<std::vector<Point>>();
}

inline void to_json(nlohmann::json& j, const AnnotationLayer& l) {
  j = {{"markers", l.markers}, {"strokes", l.strokes}};
}
inline void from_json(const nlohmann::json& j, AnnotationLayer& l) {
  l.markers = j.at("markers").get<std::vector<Marker>>();
  l.strokes = j.at("strokes").get<std::vector<SketchStroke>>();
}

inline void to_json(nlohmann::json& j, const ToolState& s) {
  j = {{"state", tag(s)}};
  std::visit(
      [&](const auto& v) {
        using S = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<S, tool::Armed>) {
          j["kind"] = to_string(v.kind);
        } else if constexpr (std::is_same_v<S, tool::DraggingCreate>) {
          j["kind"] = to_string(v.kind);
          j["anchor"] = v.anchor;
          j["current"] = v.current;
        } else if constexpr (std::is_same_v<S, tool::DraggingEdit>) {
          j["marker_id"] = v.marker_id;
          j["handle"] = to_string(v.handle);
          j["original"] = v.original;
        } else if constexpr (std::is_same_v<S, tool::Sketching>) {
          j["stroke_id"] = v.stroke_id;
          j["points"] = v.points;
        }
      },
      s);
}

inline void from_json(const nlohmann::json& j, ToolState& s) {
  const std::string st = j.at("state").get<std::string>();
  auto kind = [&] {
    auto k = tool_kind_from(j.at("kind").get<std::string>());
    if (!k) throw nlohmann::json::other_error::create(501, "unknown tool kind", &j);
    return *k;
  };
  if (st == "idle") s = tool::Idle{};
  else if (st == "menu_open") s = tool::MenuOpen{};
  else if (st == "armed") s = tool::Armed{kind()};
  else if (st == "dragging_create")
    s = tool::DraggingCreate{kind(), j.at("anchor").get<Point>(), j.at("current").get<Point>()};
  else if (st == "dragging_edit") {
    auto h = handle_from(j.at("handle").get<std::string>());
    if (!h) throw nlohmann::json::other_error::create(501, "unknown handle", &j);
    s = tool::DraggingEdit{j.at("marker_id").get<int>(), *h, j.at("original").get<Marker>()};
  } else if (st == "sketching")
    s = tool::Sketching{j.at("stroke_id").get<int>(), j.at("points").get<std::vector<Point>>()};
  else throw nlohmann::json::other_error::create(501, "unknown tool state '" + st + "'", &j);
}

inline void to_json(nlohmann::json& j, const CaptureRecord& c) {
  j = {{"id", c.id}, {"t", c.t}, {"layer", c.layer}, {"frame", nullptr}, {"composited", c.composite.has_value()}};
  if (c.frame_ref) j["frame"] = *c.frame_ref;
}

}  // namespace lapgaze
