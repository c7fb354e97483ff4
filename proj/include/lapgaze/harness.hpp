#pragma once

// Headless trial runner: feeds a recorded head trace and button edges through the
// engine (one tick per gaze sample), plus a scripted "perfect user" generator.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lapgaze/engine.hpp"

namespace lapgaze {

struct ScriptedTrial {
  Condition condition;
  std::uint64_t seed = 0;
  std::vector<GazeSample> gaze;
  std::vector<InputEvent> inputs;
};

struct TrialRun {
  TrialResult result;
  std::vector<std::string> log;
  StateSnapshot final_state;
};

// Script file: {"condition": {...}, "seed": n, "gaze": [[t_ms, yaw_rad, pitch_rad], ...],
//               "inputs": [{"t", "side", "edge", "source"}, ...]}
inline void to_json(nlohmann::json& j, const ScriptedTrial& s) {
  nlohmann::json gaze = nlohmann::json::array();
  for (const auto& g : s.gaze) gaze.push_back({g.t, g.dir.yaw, g.dir.pitch});
  j = {{"condition", s.condition}, {"seed", s.seed}, {"gaze", gaze}, {"inputs", s.inputs}};
}

inline void from_json(const nlohmann::json& j, ScriptedTrial& s) {
  s = {};
  s.condition = j.at("condition").get<Condition>();
  s.seed = j.value("seed", std::uint64_t{0});
  for (const auto& g : j.at("gaze")) s.gaze.push_back({g.at(0).get<double>(), {g.at(1).get<double>(), g.at(2).get<double>()}});
  s.inputs = j.value("inputs", std::vector<InputEvent>{});
}

/// Returns an empty string when the script is usable, else the reason.
inline std::string validate_script(const ScriptedTrial& s) {
  if (s.gaze.empty()) return "gaze trace is empty";
  for (std::size_t i = 0; i < s.gaze.size(); ++i) {
    const auto& g = s.gaze[i];
    if (!std::isfinite(g.t) || !std::isfinite(g.dir.yaw) || !std::isfinite(g.dir.pitch))
      return "gaze sample " + std::to_string(i) + " is not finite";
    if (i > 0 && !(g.t > s.gaze[i - 1].t)) return "gaze timestamps must strictly increase (sample " + std::to_string(i) + ")";
  }
  for (std::size_t i = 0; i < s.inputs.size(); ++i) {
    const double t = s.inputs[i].t;
    if (!std::isfinite(t)) return "input " + std::to_string(i) + " has a non-finite time";
    if (i > 0 && t < s.inputs[i - 1].t) return "input times must not decrease (input " + std::to_string(i) + ")";
    if (t < s.gaze.front().t || t > s.gaze.back().t)
      return "input " + std::to_string(i) + " lies outside the gaze trace";
  }
  return {};
}

/// Runs one trial. Inputs stamped at or before a gaze sample are applied in the same
/// tick, after that sample. A trial still running at the end of the trace is finished.
/// Invalid scripts produce an aborted result with diagnostics and no engine run.
inline TrialRun run_scripted_trial(const ScriptedTrial& script, const EngineConfig& cfg = {},
                                   const std::string& session_id = "headless") {
  TrialRun run;
  if (std::string why = validate_script(script); !why.empty()) {
    run.result.trial_id = session_id + "-invalid";
    run.result.condition = script.condition;
    run.result.seed = script.seed;
    run.result.status = "aborted";
    run.result.scoring = cfg.scoring;
    run.result.diagnostics = why;
    return run;
  }

  EngineConfig c = cfg;
  c.filter = script.condition.interface;
  Engine eng(c, ImageLibrary{}, session_id, script.gaze.front().dir);
  eng.open_log();
  eng.submit(msg::Control{"start_trial",
                          {{"t", script.gaze.front().t},
                           {"interface", script.condition.interface.label()},
                           {"task", to_string(script.condition.kind)},
                           {"level", to_string(script.condition.level)},
                           {"seed", script.seed}}});
  eng.tick();

  std::size_t next_input = 0;
  for (const auto& g : script.gaze) {
    eng.submit(msg::Gaze{g, "trace"});
    while (next_input < script.inputs.size() && script.inputs[next_input].t <= g.t)
      eng.submit(msg::Input{script.inputs[next_input++]});
    eng.tick();
    if (!eng.trial_active()) break;
  }
  if (eng.trial_active()) {
    eng.submit(msg::Control{"finish_trial", nlohmann::json::object()});
    eng.tick();
  }
  eng.close_log();

  if (eng.results().empty()) {
    run.result.status = "aborted";
    run.result.condition = script.condition;
    run.result.seed = script.seed;
    run.result.diagnostics = "trial did not start (see log)";
  } else {
    run.result = eng.results().back();
  }
  run.log = eng.log_lines();
  run.final_state = eng.snapshot();
  return run;
}

/// Builds a script that performs a task without error: opens the marker menu, picks the
/// right tool, annotates every target and takes the screenshot that ends the trial.
/// Reticle motion is capped at `step_deg` per sample; presses and releases wait until the
/// filter has settled on the target.
class PerfectUser {
 public:
  PerfectUser(const Condition& cond, const EngineConfig& cfg = {}, double rate_hz = 60.0, double step_deg = 0.5)
      : cond_(cond),
        scene_(Scene::default_layout(cfg.layout)),
        video_(scene_.index_of(PanelKind::video)),
        aspect_(scene_.video().aspect()),
        dt_(1000.0 / rate_hz),
        step_(deg2rad(step_deg)),
        settle_(static_cast<int>(cond.interface.kind() == FilterMode::Kind::average ? cond.interface.window() : 1) + 2),
        press_gap_(static_cast<int>(std::ceil(cfg.debounce_ms / dt_)) + 1) {}

  ScriptedTrial build(std::uint64_t seed, const TaskSpec& spec) {
    ScriptedTrial s;
    s.condition = cond_;
    s.seed = seed;
    reticle_ = at_video({aspect_ / 2.0, 0.45});
    head_ = reticle_;
    sample();
    settle();

    const AnnotationTool menu_probe(aspect_);
    click(at_video_uv(VideoControls::button_center(VideoButton::annotate)));
    const ToolKind kind = cond_.kind == TaskKind::peg_transfer ? ToolKind::circle : ToolKind::arrow;
    click(at_video(menu_probe.menu().slice_center(kind)));

    if (cond_.kind == TaskKind::peg_transfer) {
      for (Point p : spec.targets) stroke(p, {p.x + spec.ring_radius, p.y});
    } else {
      for (std::size_t k = 0; k + 1 < spec.targets.size(); ++k) {
        const Point to = spec.targets[k + 1], from = spec.targets[k];
        stroke(to, to - 0.5 * (to - from));
      }
    }
    click(at_video_uv(VideoControls::button_center(VideoButton::screenshot)));

    s.gaze = std::move(gaze_);
    s.inputs = std::move(inputs_);
    return s;
  }

 private:
  Direction at_video_uv(Uv uv) const { return scene_.uv_to_direction(video_, uv); }
  Direction at_video(Point p) const { return at_video_uv({p.x / aspect_, p.y}); }

  void sample() {
    gaze_.push_back({t_, head_});
    t_ += dt_;
  }

  // Moves the reticle in equal steps; the head follows the interface's gain.
  void move_to(Direction target) {
    const double dyaw = wrap_angle(target.yaw - reticle_.yaw), dpitch = target.pitch - reticle_.pitch;
    const int n = std::max(1, static_cast<int>(std::ceil(std::hypot(dyaw, dpitch) / step_)));
    const Direction start = reticle_;
    const double gain = cond_.interface.kind() == FilterMode::Kind::scaled ? 1.0 / cond_.interface.ratio() : 1.0;
    for (int i = 1; i <= n; ++i) {
      const Direction next = i == n ? target : Direction{start.yaw + dyaw * i / n, start.pitch + dpitch * i / n};
      head_ = normalized({head_.yaw + gain * wrap_angle(next.yaw - reticle_.yaw),
                          head_.pitch + gain * (next.pitch - reticle_.pitch)});
      reticle_ = next;
      sample();
    }
  }

  void settle() {
    for (int i = 0; i < settle_; ++i) sample();
  }

  void edge(Edge e) {
    inputs_.push_back({gaze_.back().t, Side::left, e, InputSource::ring});
    for (int i = 0; i < press_gap_; ++i) sample();
  }

  void click(Direction where) {
    move_to(where);
    settle();
    edge(Edge::press);
    edge(Edge::release);
  }

  void stroke(Point from, Point to) {
    move_to(at_video(from));
    settle();
    edge(Edge::press);
    move_to(at_video(to));
    settle();
    edge(Edge::release);
  }

  Condition cond_;
  Scene scene_;
  std::size_t video_;
  double aspect_;
  double dt_;
  double step_;
  int settle_;
  int press_gap_;
  double t_ = 0.0;
  Direction reticle_, head_;
  std::vector<GazeSample> gaze_;
  std::vector<InputEvent> inputs_;
};

inline ScriptedTrial perfect_user_script(const Condition& cond, std::uint64_t seed, const EngineConfig& cfg = {}) {
  const Scene scene = Scene::default_layout(cfg.layout);
  const TaskSpec spec = generate_task(cond.kind, cond.level, seed, scene.video().aspect(), cfg.tasks);
  return PerfectUser(cond, cfg).build(seed, spec);
}

}  // namespace lapgaze
