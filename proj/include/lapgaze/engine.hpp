#pragma once

// Headless interaction engine.
//
// All inbound traffic (gaze samples, button edges, control commands) goes through
// one queue and is applied on tick(), in arrival order. Every applied message is
// written to the session event log together with the tick that consumed it, so
// the log alone reproduces the snapshot sequence (see replay.hpp).

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lapgaze/annotation.hpp"
#include "lapgaze/controls.hpp"
#include "lapgaze/experiment.hpp"
#include "lapgaze/gaze_filter.hpp"
#include "lapgaze/image_browser.hpp"
#include "lapgaze/input_bridge.hpp"
#include "lapgaze/scene.hpp"

namespace lapgaze {

inline constexpr int kLogVersion = 1;
inline constexpr int kSnapshotSchema = 1;
inline constexpr const char* kLogFormat = "lapgaze-session";

struct EngineConfig {
  FilterMode filter = FilterMode::immediate();
  LayoutOptions layout;
  AnnotationParams annotation;
  double debounce_ms = 20.0;
  TaskParams tasks;
  ScoringParams scoring;
};

inline void to_json(nlohmann::json& j, const LayoutOptions& o) {
  j = {{"distance", o.distance},
       {"video_deg", {o.video_w_deg, o.video_h_deg}},
       {"image_deg", {o.image_w_deg, o.image_h_deg}},
       {"help_deg", {o.help_w_deg, o.help_h_deg}},
       {"gap_deg", o.gap_deg}};
}
inline void from_json(const nlohmann::json& j, LayoutOptions& o) {
  o = {};
  o.distance = j.value("distance", o.distance);
  auto pair = [&](const char* key, double& w, double& h) {
    if (!j.contains(key)) return;
    w = j.at(key).at(0).get<double>();
    h = j.at(key).at(1).get<double>();
  };
  pair("video_deg", o.video_w_deg, o.video_h_deg);
  pair("image_deg", o.image_w_deg, o.image_h_deg);
  pair("help_deg", o.help_w_deg, o.help_h_deg);
  o.gap_deg = j.value("gap_deg", o.gap_deg);
}

inline void to_json(nlohmann::json& j, const EngineConfig& c) {
  j = {{"filter", c.filter.label()},
       {"layout", c.layout},
       {"annotation",
        {{"pick_radius", c.annotation.pick_radius},
         {"min_spacing", c.annotation.min_spacing},
         {"zero_length", c.annotation.zero_length}}},
       {"debounce_ms", c.debounce_ms},
       {"tasks",
        {{"peg_rings", c.tasks.peg_rings},
         {"thread_holes", c.tasks.thread_holes},
         {"min_separation", c.tasks.min_separation},
         {"margin", c.tasks.margin},
         {"content_bottom", c.tasks.content_bottom},
         {"ring_radius", c.tasks.ring_radius},
         {"max_attempts", c.tasks.max_attempts},
         {"image_width", c.tasks.image_width}}},
       {"scoring", c.scoring}};
}

inline void from_json(const nlohmann::json& j, EngineConfig& c) {
  c = {};
  if (j.contains("filter")) c.filter = FilterMode::parse(j.at("filter").get<std::string>());
  if (j.contains("layout")) c.layout = j.at("layout").get<LayoutOptions>();
  if (j.contains("annotation")) {
    const auto& a = j.at("annotation");
    c.annotation.pick_radius = a.value("pick_radius", c.annotation.pick_radius);
    c.annotation.min_spacing = a.value("min_spacing", c.annotation.min_spacing);
    c.annotation.zero_length = a.value("zero_length", c.annotation.zero_length);
  }
  c.debounce_ms = j.value("debounce_ms", c.debounce_ms);
  if (c.debounce_ms < 0) throw std::invalid_argument("debounce_ms must be >= 0");
  if (j.contains("tasks")) {
    const auto& t = j.at("tasks");
    if (t.contains("peg_rings")) c.tasks.peg_rings = t.at("peg_rings").get<std::array<int, 3>>();
    if (t.contains("thread_holes")) c.tasks.thread_holes = t.at("thread_holes").get<std::array<int, 3>>();
    c.tasks.min_separation = t.value("min_separation", c.tasks.min_separation);
    c.tasks.margin = t.value("margin", c.tasks.margin);
    c.tasks.content_bottom = t.value("content_bottom", c.tasks.content_bottom);
    c.tasks.ring_radius = t.value("ring_radius", c.tasks.ring_radius);
    c.tasks.max_attempts = t.value("max_attempts", c.tasks.max_attempts);
    c.tasks.image_width = t.value("image_width", c.tasks.image_width);
  }
  if (j.contains("scoring")) c.scoring = j.at("scoring").get<ScoringParams>();
}

// Inbound messages. The same JSON shapes are used on the wire and in the log.
namespace msg {
struct Gaze {
  GazeSample sample;
  std::string provenance = "ui";  // "ui" (mouse-as-head) or "trace"
};
struct Input {
  InputEvent event;
};
struct Control {
  std::string action;  // recenter | set_filter | start_trial | finish_trial | abort_trial
  nlohmann::json args = nlohmann::json::object();
};
}  // namespace msg

using Inbound = std::variant<msg::Gaze, msg::Input, msg::Control>;

inline nlohmann::json inbound_payload(const Inbound& m) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, msg::Gaze>)
          return {{"t", v.sample.t}, {"yaw", v.sample.dir.yaw}, {"pitch", v.sample.dir.pitch},
                  {"provenance", v.provenance}};
        else if constexpr (std::is_same_v<T, msg::Input>)
          return v.event;
        else
          return {{"action", v.action}, {"args", v.args}};
      },
      m);
}

inline const char* inbound_type(const Inbound& m) {
  static constexpr const char* names[] = {"gaze", "input", "control"};
  return names[m.index()];
}

/// Parses {"type": "gaze"|"input"|"control", ...payload fields}.
inline Inbound parse_inbound(const std::string& type, const nlohmann::json& p) {
  if (type == "gaze") {
    msg::Gaze g;
    g.sample.t = p.at("t").get<double>();
    g.sample.dir = {p.at("yaw").get<double>(), p.at("pitch").get<double>()};
    if (!std::isfinite(g.sample.t) || !std::isfinite(g.sample.dir.yaw) || !std::isfinite(g.sample.dir.pitch))
      throw std::invalid_argument("gaze values must be finite");
    g.provenance = p.value("provenance", std::string("ui"));
    return g;
  }
  if (type == "input") return msg::Input{p.get<InputEvent>()};
  if (type == "control") {
    msg::Control c;
    c.action = p.at("action").get<std::string>();
    c.args = p.value("args", nlohmann::json::object());
    return c;
  }
  throw std::invalid_argument("unknown message type '" + type + "'");
}

struct PanelView {
  std::string id;
  PanelKind kind = PanelKind::video;
  double distance = 0, width = 0, height = 0;
  bool interactive = true;
  std::array<double, 9> frame{};  // row-major world rotation: columns right, up, normal

  friend bool operator==(const PanelView&, const PanelView&) = default;
};

struct HitView {
  std::string panel_id;
  PanelKind kind = PanelKind::video;
  Uv uv;

  friend bool operator==(const HitView&, const HitView&) = default;
};

struct BrowserView {
  BrowserState state;
  std::vector<std::string> folders;
  std::vector<ImageRef> items;  // current grid page, or the single full image
  std::size_t pages = 1;

  friend bool operator==(const BrowserView&, const BrowserView&) = default;
};

struct TrialView {
  std::string id;
  Condition condition;
  std::uint64_t seed = 0;
  double start_t = 0.0;
  std::vector<Point> targets;
  std::optional<Point> reference;

  friend bool operator==(const TrialView&, const TrialView&) = default;
};

/// Self-contained render state for one tick.
struct StateSnapshot {
  int schema = kSnapshotSchema;
  std::uint64_t tick = 0;
  double t = 0.0;
  Direction head;
  Direction reticle;
  std::string filter;
  std::optional<HitView> hit;
  ToolState tool;
  AnnotationLayer layer;
  bool follow = false;
  std::vector<PanelView> panels;
  BrowserView browser;
  std::optional<TrialView> trial;
  std::optional<TrialResult> last_result;
  int captures = 0;

  friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

inline PanelKind panel_kind_from(std::string_view s) {
  for (PanelKind k : {PanelKind::video, PanelKind::image, PanelKind::help_left, PanelKind::help_right})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown panel kind '" + std::string(s) + "'");
}

inline void to_json(nlohmann::json& j, const Direction& d) { j = {{"yaw", d.yaw}, {"pitch", d.pitch}}; }
inline void from_json(const nlohmann::json& j, Direction& d) {
  d = {j.at("yaw").get<double>(), j.at("pitch").get<double>()};
}

inline void to_json(nlohmann::json& j, const StateSnapshot& s) {
  nlohmann::json panels = nlohmann::json::array();
  for (const auto& p : s.panels)
    panels.push_back({{"id", p.id}, {"kind", to_string(p.kind)}, {"distance", p.distance},
                      {"width", p.width}, {"height", p.height}, {"interactive", p.interactive},
                      {"frame", p.frame}});
  j = {{"type", "snapshot"},
       {"schema", s.schema},
       {"tick", s.tick},
       {"t", s.t},
       {"head", s.head},
       {"reticle", s.reticle},
       {"filter", s.filter},
       {"hit", nullptr},
       {"tool", nullptr},
       {"layer", s.layer},
       {"follow", s.follow},
       {"panels", panels},
       {"browser",
        {{"state", s.browser.state}, {"folders", s.browser.folders}, {"items", s.browser.items},
         {"pages", s.browser.pages}}},
       {"trial", nullptr},
       {"last_result", nullptr},
       {"captures", s.captures}};
  to_json(j["tool"], s.tool);  // variant of lapgaze::tool types: no ADL into lapgaze
  if (s.hit) j["hit"] = {{"panel", s.hit->panel_id}, {"kind", to_string(s.hit->kind)}, {"u", s.hit->uv.u}, {"v", s.hit->uv.v}};
  if (s.trial)
    j["trial"] = {{"id", s.trial->id},           {"condition", s.trial->condition},
                  {"seed", s.trial->seed},       {"start_t", s.trial->start_t},
                  {"targets", s.trial->targets}, {"reference", s.trial->reference ? nlohmann::json(*s.trial->reference) : nlohmann::json()}};
  if (s.last_result) j["last_result"] = *s.last_result;
}

inline void from_json(const nlohmann::json& j, StateSnapshot& s) {
  s = {};
  s.schema = j.at("schema").get<int>();
  if (s.schema != kSnapshotSchema)
    throw std::invalid_argument("snapshot schema " + std::to_string(s.schema) + " not supported");
  s.tick = j.at("tick").get<std::uint64_t>();
  s.t = j.at("t").get<double>();
  s.head = j.at("head").get<Direction>();
  s.reticle = j.at("reticle").get<Direction>();
  s.filter = j.at("filter").get<std::string>();
  if (!j.at("hit").is_null()) {
    const auto& h = j.at("hit");
    s.hit = HitView{h.at("panel").get<std::string>(), panel_kind_from(h.at("kind").get<std::string>()),
                    {h.at("u").get<double>(), h.at("v").get<double>()}};
  }
  from_json(j.at("tool"), s.tool);
  s.layer = j.at("layer").get<AnnotationLayer>();
  s.follow = j.at("follow").get<bool>();
  for (const auto& p : j.at("panels"))
    s.panels.push_back({p.at("id").get<std::string>(), panel_kind_from(p.at("kind").get<std::string>()),
                        p.at("distance").get<double>(), p.at("width").get<double>(), p.at("height").get<double>(),
                        p.at("interactive").get<bool>(), p.at("frame").get<std::array<double, 9>>()});
  const auto& b = j.at("browser");
  s.browser = {b.at("state").get<BrowserState>(), b.at("folders").get<std::vector<std::string>>(),
               b.at("items").get<std::vector<ImageRef>>(), b.at("pages").get<std::size_t>()};
  if (!j.at("trial").is_null()) {
    const auto& t = j.at("trial");
    TrialView v;
    v.id = t.at("id").get<std::string>();
    v.condition = t.at("condition").get<Condition>();
    v.seed = t.at("seed").get<std::uint64_t>();
    v.start_t = t.at("start_t").get<double>();
    v.targets = t.at("targets").get<std::vector<Point>>();
    if (!t.at("reference").is_null()) v.reference = t.at("reference").get<Point>();
    s.trial = std::move(v);
  }
  if (!j.at("last_result").is_null()) s.last_result = j.at("last_result").get<TrialResult>();
  s.captures = j.at("captures").get<int>();
}

class Engine {
 public:
  using LogSink = std::function<void(const std::string& line)>;

  Engine(EngineConfig cfg, ImageLibrary library, std::string session_id = "session",
         Direction initial_head = {}, bool retain_log = true)
      : cfg_(std::move(cfg)),
        session_(std::move(session_id)),
        head_(normalized(initial_head)),
        filter_(cfg_.filter, head_),
        scene_(Scene::default_layout(cfg_.layout)),
        tool_(scene_.video().aspect(), cfg_.annotation),
        browser_(std::move(library)),
        debouncer_(cfg_.debounce_ms),
        retain_log_(retain_log) {
    scene_.update_head(head_);
    hit_ = scene_.ray_hit(filter_.reticle());
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Starts logging: emits the header line. Call once before the first tick.
  void open_log(LogSink sink = {}) {
    sink_ = std::move(sink);
    nlohmann::json lib = nlohmann::json::array();
    for (const auto& f : browser_.library().folders()) lib.push_back(f);
    emit("header", 0, {{"format", kLogFormat},
                       {"version", kLogVersion},
                       {"session", session_},
                       {"config", cfg_},
                       {"library", lib},
                       {"initial_head", head_}},
         false);
  }

  /// Writes the terminating line.
  void close_log() { emit("end", now_, nlohmann::json::object(), true, tick_); }

  /// Thread-safe: the only way other execution contexts feed the engine.
  void submit(Inbound m) {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(std::move(m));
  }

  std::size_t pending() const {
    std::lock_guard lock(queue_mu_);
    return queue_.size();
  }

  /// Applies every queued message in arrival order and returns the new state.
  StateSnapshot tick() {
    std::deque<Inbound> batch;
    {
      std::lock_guard lock(queue_mu_);
      batch.swap(queue_);
    }
    ++tick_;
    for (auto& m : batch) {
      emit(inbound_type(m), message_time(m), inbound_payload(m), true, tick_);
      std::visit([this](auto& v) { apply(v); }, m);
    }
    return snapshot();
  }

  StateSnapshot snapshot() const {
    StateSnapshot s;
    s.tick = tick_;
    s.t = now_;
    s.head = head_;
    s.reticle = filter_.reticle();
    s.filter = filter_.mode().label();
    if (hit_) s.hit = HitView{hit_->panel_id, hit_->kind, hit_->uv};
    s.tool = tool_.state();
    s.layer = tool_.layer();
    s.follow = scene_.follow();
    for (std::size_t i = 0; i < scene_.panels().size(); ++i) {
      const Panel& p = scene_.panels()[i];
      PanelView v{p.id, p.kind, p.distance, p.width, p.height, p.interactive, {}};
      const Eigen::Matrix3d f = scene_.panel_frame(i);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) v.frame[static_cast<std::size_t>(r * 3 + c)] = f(r, c);
      s.panels.push_back(std::move(v));
    }
    s.browser.state = browser_.state();
    for (const auto& f : browser_.library().folders()) s.browser.folders.push_back(f.name);
    s.browser.pages = browser_.grid_pages();
    const auto& bs = browser_.state();
    if (bs.mode != BrowserState::Mode::folder_grid) {
      const auto& folder = browser_.library().at(*browser_.library().find(bs.folder));
      if (bs.mode == BrowserState::Mode::full_image) {
        s.browser.items.push_back(folder.images.at(bs.index));
      } else {
        for (std::size_t k = bs.page * ImageBrowser::kGridCells;
             k < folder.images.size() && k < (bs.page + 1) * ImageBrowser::kGridCells; ++k)
          s.browser.items.push_back(folder.images[k]);
      }
    } else {
      for (std::size_t k = bs.page * ImageBrowser::kGridCells;
           k < s.browser.folders.size() && k < (bs.page + 1) * ImageBrowser::kGridCells; ++k)
        s.browser.items.push_back({s.browser.folders[k], "folder:" + s.browser.folders[k]});
    }
    if (trial_)
      s.trial = TrialView{trial_->id, trial_->condition, trial_->seed, trial_->start_t,
                          trial_->spec.targets, trial_->spec.reference};
    if (!results_.empty()) s.last_result = results_.back();
    s.captures = static_cast<int>(captures_.size());
    return s;
  }

  std::uint64_t tick_id() const { return tick_; }
  double now() const { return now_; }
  const EngineConfig& config() const { return cfg_; }
  const std::string& session_id() const { return session_; }
  const ReticleFilter& filter() const { return filter_; }
  const Scene& scene() const { return scene_; }
  const AnnotationTool& tool() const { return tool_; }
  const ImageBrowser& browser() const { return browser_; }
  const Debouncer& debouncer() const { return debouncer_; }
  const std::optional<PanelHit>& hit() const { return hit_; }
  Direction head() const { return head_; }
  bool trial_active() const { return trial_.has_value(); }
  const std::vector<TrialResult>& results() const { return results_; }
  const std::vector<CaptureRecord>& captures() const { return captures_; }
  const std::vector<std::string>& log_lines() const { return log_; }
  const std::map<std::string, Image>& generated_images() const { return generated_; }

  /// Results finished since the last call.
  std::vector<TrialResult> take_completed() {
    std::vector<TrialResult> out;
    out.swap(completed_);
    return out;
  }

 private:
  struct ActiveTrial {
    std::string id;
    Condition condition;
    std::uint64_t seed = 0;
    TaskSpec spec;
    double start_t = 0.0;
    std::uint64_t start_tick = 0;
    std::vector<GazeSample> head_samples;
  };

  static double message_time(const Inbound& m) {
    if (auto* g = std::get_if<msg::Gaze>(&m)) return g->sample.t;
    if (auto* i = std::get_if<msg::Input>(&m)) return i->event.t;
    const auto& args = std::get<msg::Control>(m).args;
    if (args.contains("t") && args.at("t").is_number()) return args.at("t").get<double>();
    return -1.0;  // stamped with the current logical time
  }

  void emit(const char* type, double t, nlohmann::json payload, bool with_tick = false, std::uint64_t tick = 0) {
    if (!sink_ && !retain_log_) return;
    nlohmann::json line{{"t", t < 0 ? now_ : t}, {"type", type}};
    if (with_tick) line["tick"] = tick;
    line["payload"] = std::move(payload);
    std::string text = line.dump();
    if (sink_) sink_(text);
    if (retain_log_) log_.push_back(std::move(text));
  }

  void note(const char* type, nlohmann::json payload) { emit(type, now_, std::move(payload), true, tick_); }

  void advance_clock(double t) {
    if (t > now_) now_ = t;
  }

  Point video_point(const PanelHit& h) const { return {h.uv.u * tool_.aspect(), h.uv.v}; }

  void apply(const msg::Gaze& g) {
    Direction reticle;
    try {
      // the engine-level check survives filter swaps
      if (last_gaze_t_ && !(g.sample.t > *last_gaze_t_)) throw NonMonotonicTimestamp(*last_gaze_t_, g.sample.t);
      reticle = filter_.push(g.sample);
    } catch (const NonMonotonicTimestamp& e) {
      note("error", {{"message", e.what()}});
      return;
    }
    last_gaze_t_ = g.sample.t;
    advance_clock(g.sample.t);
    head_ = filter_.last_head();
    scene_.update_head(head_);
    hit_ = scene_.ray_hit(reticle);
    if (hit_ && hit_->kind == PanelKind::video) {
      last_video_point_ = video_point(*hit_);
      if (tool_.busy()) tool_.drag(*last_video_point_);
    }
    if (trial_) trial_->head_samples.push_back({g.sample.t, head_});
  }

  void apply(const msg::Input& in) {
    advance_clock(in.event.t);
    auto accepted = debouncer_.accept(in.event);
    if (!accepted) {
      note("debounced", in.event);
      return;
    }
    const RouteContext ctx = make_context(hit_, tool_.state(), browser_.state(), tool_.aspect());
    const Action a = route(*accepted, ctx);
    const Outcome o = perform(a);
    nlohmann::json p{{"action", tag(a)}, {"status", to_string(o.status)}};
    if (!o.note.empty()) p["note"] = o.note;
    if (auto* n = std::get_if<action::Noop>(&a)) p["note"] = n->reason;
    note("action", std::move(p));
  }

  Outcome perform(const Action& a) {
    return std::visit(
        [this](const auto& v) -> Outcome {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, action::Noop>) {
            return Outcome::ignored(v.reason);
          } else if constexpr (std::is_same_v<T, action::ToolPress>) {
            return tool_.press(v.at);
          } else if constexpr (std::is_same_v<T, action::ToolRelease>) {
            const Point at = v.at ? *v.at : last_video_point_.value_or(Point{});
            return tool_.release(at);
          } else if constexpr (std::is_same_v<T, action::VideoControl>) {
            switch (v.button) {
              case VideoButton::screenshot: capture(); return Outcome::applied();
              case VideoButton::clear_markers: tool_.clear_markers(); return Outcome::applied();
              case VideoButton::clear_sketch: tool_.clear_sketch(); return Outcome::applied();
              case VideoButton::annotate:
                if (std::holds_alternative<tool::MenuOpen>(tool_.state())) return tool_.close_menu();
                return tool_.open_menu();
            }
            return Outcome::ignored("unknown control");
          } else if constexpr (std::is_same_v<T, action::ToggleFollow>) {
            scene_.set_follow(!scene_.follow(), head_);
            return Outcome::applied(scene_.follow() ? "follow on" : "follow off");
          } else if constexpr (std::is_same_v<T, action::BrowserPage>) {
            return browser_.page(v.dir);
          } else if constexpr (std::is_same_v<T, action::BrowserGridPage>) {
            return browser_.grid_page(v.dir);
          } else if constexpr (std::is_same_v<T, action::BrowserSelect>) {
            return browser_.select_cell(v.cell);
          } else {
            return browser_.back();
          }
        },
        a);
  }

  void capture() {
    CaptureRecord rec = tool_.screenshot(now_);
    browser_.append_capture({"capture-" + std::to_string(rec.id), "capture:" + std::to_string(rec.id)});
    note("capture", rec);
    captures_.push_back(std::move(rec));
    if (trial_) finish_trial("completed");
  }

  void apply(const msg::Control& c) {
    if (c.args.contains("t") && c.args.at("t").is_number()) advance_clock(c.args.at("t").get<double>());
    try {
      if (c.action == "recenter") {
        if (!filter_.recenter()) note("warning", {{"message", "recenter ignored: filter is not scaled"}});
        else hit_ = scene_.ray_hit(filter_.reticle());
      } else if (c.action == "set_filter") {
        if (trial_) throw std::invalid_argument("cannot change the filter during a trial");
        reset_filter(FilterMode::parse(c.args.at("mode").get<std::string>()));
      } else if (c.action == "start_trial") {
        if (trial_) throw std::invalid_argument("a trial is already running");
        Condition cond;
        cond.interface = FilterMode::parse(c.args.at("interface").get<std::string>());
        cond.kind = task_kind_from(c.args.at("task").get<std::string>());
        cond.level = level_from(c.args.at("level").get<std::string>());
        start_trial(cond, c.args.value("seed", std::uint64_t{0}));
      } else if (c.action == "finish_trial" || c.action == "abort_trial") {
        if (!trial_) throw std::invalid_argument("no trial is running");
        finish_trial(c.action == "finish_trial" ? "completed" : "aborted");
      } else {
        throw std::invalid_argument("unknown control action '" + c.action + "'");
      }
    } catch (const std::exception& e) {
      note("error", {{"message", e.what()}, {"action", c.action}});
    }
  }

  void reset_filter(FilterMode mode) {
    filter_ = ReticleFilter(mode, head_);
    hit_ = scene_.ray_hit(filter_.reticle());
  }

  void start_trial(const Condition& cond, std::uint64_t seed) {
    TaskSpec spec = generate_task(cond.kind, cond.level, seed, tool_.aspect(), cfg_.tasks);
    reset_filter(cond.interface);
    tool_.reset();
    if (spec.reference) tool_.add_reference_circle(*spec.reference, spec.ring_radius);
    const std::string folder = task_folder(cond.kind, cond.level);
    Folder f{folder, {}};
    for (std::size_t i = 0; i < spec.solution_images.size(); ++i) {
      const std::string key = folder + "/" + std::to_string(i);
      f.images.push_back({spec.solution_images[i].name, "task:" + key});
      generated_[key] = spec.solution_images[i].image;
    }
    browser_.put_folder(std::move(f));

    ++trial_counter_;
    ActiveTrial t;
    t.id = session_ + "-t" + std::to_string(trial_counter_);
    t.condition = cond;
    t.seed = seed;
    t.start_t = now_;
    t.start_tick = tick_;
    t.head_samples.push_back({now_, head_});
    nlohmann::json p{{"trial_id", t.id}, {"condition", cond}, {"seed", seed}, {"targets", spec.targets}};
    if (spec.reference) p["reference"] = *spec.reference;
    t.spec = std::move(spec);
    trial_ = std::move(t);
    note("trial_start", std::move(p));
  }

  void finish_trial(const std::string& status) {
    const ActiveTrial& t = *trial_;
    const Score score = score_task(tool_.layer(), t.spec, cfg_.scoring);
    TrialResult r;
    r.trial_id = t.id;
    r.condition = t.condition;
    r.seed = t.seed;
    r.status = status;
    r.time_ms = now_ - t.start_t;
    r.precision_mean = score.precision_mean;
    r.accuracy = score.accuracy;
    r.head_path_deg = head_path(t.head_samples);
    r.matched = score.matched;
    r.expected = score.expected;
    r.scoring = cfg_.scoring;
    r.event_log_ref = session_ + ":" + std::to_string(t.start_tick) + "-" + std::to_string(tick_);
    trial_.reset();
    note("trial_end", r);
    results_.push_back(r);
    completed_.push_back(std::move(r));
  }

  EngineConfig cfg_;
  std::string session_;
  Direction head_;
  ReticleFilter filter_;
  Scene scene_;
  AnnotationTool tool_;
  ImageBrowser browser_;
  Debouncer debouncer_;
  std::optional<PanelHit> hit_;
  std::optional<Point> last_video_point_;
  std::optional<double> last_gaze_t_;
  std::optional<ActiveTrial> trial_;
  int trial_counter_ = 0;
  std::vector<TrialResult> results_;
  std::vector<TrialResult> completed_;
  std::vector<CaptureRecord> captures_;
  std::map<std::string, Image> generated_;

  std::uint64_t tick_ = 0;
  double now_ = 0.0;

  mutable std::mutex queue_mu_;
  std::deque<Inbound> queue_;

  LogSink sink_;
  bool retain_log_;
  std::vector<std::string> log_;
};

}  // namespace lapgaze
