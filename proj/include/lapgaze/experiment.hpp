#pragma once

// Training tasks, the interface x task condition matrix, trial scoring and metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lapgaze/annotation.hpp"
#include "lapgaze/gaze_filter.hpp"
#include "lapgaze/geometry.hpp"
#include "lapgaze/hungarian.hpp"
#include "lapgaze/raster.hpp"

namespace lapgaze {

enum class TaskKind { peg_transfer, thread_passing };
enum class Level { easy, medium, hard };

inline const char* to_string(TaskKind k) { return k == TaskKind::peg_transfer ? "peg" : "thread"; }
inline const char* to_string(Level l) {
  switch (l) {
    case Level::easy: return "easy";
    case Level::medium: return "medium";
    case Level::hard: return "hard";
  }
  return "?";
}

inline TaskKind task_kind_from(std::string_view s) {
  if (s == "peg" || s == "peg_transfer") return TaskKind::peg_transfer;
  if (s == "thread" || s == "thread_passing") return TaskKind::thread_passing;
  throw std::invalid_argument("unknown task kind '" + std::string(s) + "'");
}

inline Level level_from(std::string_view s) {
  if (s == "easy") return Level::easy;
  if (s == "medium") return Level::medium;
  if (s == "hard") return Level::hard;
  throw std::invalid_argument("unknown level '" + std::string(s) + "'");
}

/// Image-panel folder holding the solution pictures for one task condition, e.g. "peg-easy".
inline std::string task_folder(TaskKind k, Level l) { return std::string(to_string(k)) + "-" + to_string(l); }

struct TaskParams {
  std::array<int, 3> peg_rings{4, 6, 8};     // scored rings per level, green reference excluded
  std::array<int, 3> thread_holes{3, 5, 7};  // holes per level
  double min_separation = 0.08;
  double margin = 0.06;           // keeps targets (and a ring radius) inside the video area
  double content_bottom = 0.85;   // stay above the controller bar
  double ring_radius = 0.03;
  int max_attempts = 20000;
  int image_width = 320;
};

struct NamedImage {
  std::string name;
  Image image;
};

struct TaskSpec {
  TaskKind kind = TaskKind::peg_transfer;
  Level level = Level::easy;
  std::uint64_t seed = 0;
  double aspect = 1.0;
  std::vector<Point> targets;      // peg: scored ring centers; thread: holes in traversal order
  std::optional<Point> reference;  // peg: the green ring
  double ring_radius = 0.03;
  std::vector<NamedImage> solution_images;
};

class TaskGenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
/// Uniform double in [0, 1) from the top 53 bits; identical across standard libraries.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline NamedImage render_task_image(const TaskSpec& spec, bool with_solution, int width) {
  const int height = std::max(1, static_cast<int>(std::lround(width / spec.aspect)));
  Image img(width, height, {36, 36, 44});
  const double s = height;  // pixels per aspect-corrected unit
  const double ring_px = spec.ring_radius * s;
  const Rgb target{200, 200, 210};
  if (spec.kind == TaskKind::peg_transfer) {
    for (const auto& p : spec.targets) fill_disc(img, p.x * s, p.y * s, ring_px * 0.6, target);
    if (spec.reference) {
      fill_disc(img, spec.reference->x * s, spec.reference->y * s, ring_px * 0.6, kReferenceGreen);
      draw_circle(img, spec.reference->x * s, spec.reference->y * s, ring_px, kReferenceGreen);
    }
    if (with_solution)
      for (const auto& p : spec.targets) draw_circle(img, p.x * s, p.y * s, ring_px, kMarkerRed);
  } else {
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
      const auto& p = spec.targets[i];
      fill_disc(img, p.x * s, p.y * s, ring_px * 0.5, i == 0 ? kReferenceGreen : target);
    }
    if (with_solution)
      for (std::size_t i = 1; i < spec.targets.size(); ++i) {
        const Point h = spec.targets[i], t = spec.targets[i - 1];
        draw_arrow(img, h.x * s, h.y * s, t.x * s, t.y * s, 0.03 * s, kMarkerRed);
      }
  }
  return {with_solution ? "solution.bmp" : "board.bmp", std::move(img)};
}
}  // namespace detail

/// Deterministic in (kind, level, seed). Targets are rejection-sampled with a pairwise
/// separation floor; throws TaskGenerationError when the attempt budget runs out.
inline TaskSpec generate_task(TaskKind kind, Level level, std::uint64_t seed, double aspect,
                              const TaskParams& params = {}) {
  TaskSpec spec;
  spec.kind = kind;
  spec.level = level;
  spec.seed = seed;
  spec.aspect = aspect;
  spec.ring_radius = params.ring_radius;
  const auto li = static_cast<std::size_t>(level);
  const int scored = kind == TaskKind::peg_transfer ? params.peg_rings[li] : params.thread_holes[li];
  const int total = scored + (kind == TaskKind::peg_transfer ? 1 : 0);

  const double x0 = params.margin, x1 = aspect - params.margin;
  const double y0 = params.margin, y1 = params.content_bottom - params.margin;
  if (!(x1 > x0 && y1 > y0)) throw TaskGenerationError("video area too small for task placement");

  std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(kind) << 32) ^ (static_cast<std::uint64_t>(level) << 40));
  std::vector<Point> placed;
  int attempts = 0;
  while (static_cast<int>(placed.size()) < total) {
    if (++attempts > params.max_attempts)
      throw TaskGenerationError("could not place " + std::to_string(total) + " targets " +
                                std::to_string(params.min_separation) + " apart after " +
                                std::to_string(params.max_attempts) + " attempts");
    const Point p{x0 + (x1 - x0) * detail::unit(rng), y0 + (y1 - y0) * detail::unit(rng)};
    const bool clear = std::all_of(placed.begin(), placed.end(), [&](Point q) {
      return distance(p, q) >= params.min_separation;
    });
    if (clear) placed.push_back(p);
  }
  if (kind == TaskKind::peg_transfer) {
    spec.reference = placed.back();
    placed.pop_back();
  }
  spec.targets = std::move(placed);
  spec.solution_images.push_back(detail::render_task_image(spec, false, params.image_width));
  spec.solution_images.push_back(detail::render_task_image(spec, true, params.image_width));
  return spec;
}

struct ScoringParams {
  double match_threshold = 0.05;
  double arrow_angle_deg = 30.0;

  friend bool operator==(const ScoringParams&, const ScoringParams&) = default;
};

struct Score {
  double precision_mean = std::numeric_limits<double>::infinity();  // +inf when nothing matched
  double accuracy = 0.0;
  std::size_t matched = 0;    // targets (peg) or pairs (thread) counted as correct
  std::size_t expected = 0;
  double total_cost = 0.0;    // sum of assigned distances
};

/// Circle markers against ring targets via optimal one-to-one assignment.
inline Score score_peg(const AnnotationLayer& layer, const TaskSpec& spec, const ScoringParams& p = {}) {
  Score s;
  s.expected = spec.targets.size();
  std::vector<Point> centers;
  for (const auto& m : layer.markers)
    if (m.kind == MarkerKind::circle && !m.reference) centers.push_back(m.first);
  if (centers.empty() || spec.targets.empty()) return s;

  std::vector<std::vector<double>> cost(spec.targets.size(), std::vector<double>(centers.size()));
  for (std::size_t i = 0; i < spec.targets.size(); ++i)
    for (std::size_t j = 0; j < centers.size(); ++j) cost[i][j] = distance(spec.targets[i], centers[j]);
  const auto assign = solve_assignment(cost);

  std::size_t assigned = 0;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] < 0) continue;
    const double d = cost[i][static_cast<std::size_t>(assign[i])];
    s.total_cost += d;
    ++assigned;
    if (d <= p.match_threshold) ++s.matched;
  }
  s.precision_mean = s.total_cost / static_cast<double>(assigned);
  s.accuracy = static_cast<double>(s.matched) / static_cast<double>(s.expected);
  return s;
}

/// Whether an arrow annotates the hole pair from -> to: head near `to`, pointing along the pair.
inline bool arrow_matches_pair(const Marker& arrow, Point from, Point to, const ScoringParams& p) {
  if (distance(arrow.first, to) > p.match_threshold) return false;
  const Point a = arrow.first - arrow.second;  // tail -> head
  const Point b = to - from;
  const double angle = std::atan2(std::abs(a.x * b.y - a.y * b.x), a.x * b.x + a.y * b.y);
  return angle <= deg2rad(p.arrow_angle_deg);
}

/// Arrow markers against consecutive hole pairs. Maximizes the number of matched pairs,
/// breaking ties by total head distance.
inline Score score_thread(const AnnotationLayer& layer, const TaskSpec& spec, const ScoringParams& p = {}) {
  Score s;
  const std::size_t pairs = spec.targets.size() >= 2 ? spec.targets.size() - 1 : 0;
  s.expected = pairs;
  std::vector<const Marker*> arrows;
  for (const auto& m : layer.markers)
    if (m.kind == MarkerKind::arrow && !m.reference) arrows.push_back(&m);
  if (arrows.empty() || pairs == 0) return s;

  constexpr double kIneligible = 1e6;
  std::vector<std::vector<double>> cost(pairs, std::vector<double>(arrows.size(), kIneligible));
  for (std::size_t k = 0; k < pairs; ++k)
    for (std::size_t a = 0; a < arrows.size(); ++a)
      if (arrow_matches_pair(*arrows[a], spec.targets[k], spec.targets[k + 1], p))
        cost[k][a] = distance(arrows[a]->first, spec.targets[k + 1]);
  const auto assign = solve_assignment(cost);
  for (std::size_t k = 0; k < pairs; ++k) {
    if (assign[k] < 0) continue;
    const double c = cost[k][static_cast<std::size_t>(assign[k])];
    if (c >= kIneligible) continue;
    ++s.matched;
    s.total_cost += c;
  }
  if (s.matched > 0) s.precision_mean = s.total_cost / static_cast<double>(s.matched);
  s.accuracy = static_cast<double>(s.matched) / static_cast<double>(pairs);
  return s;
}

inline Score score_task(const AnnotationLayer& layer, const TaskSpec& spec, const ScoringParams& p = {}) {
  return spec.kind == TaskKind::peg_transfer ? score_peg(layer, spec, p) : score_thread(layer, spec, p);
}

/// Total great-circle head rotation along a trace, degrees.
inline double head_path(const std::vector<GazeSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("head_path needs at least one sample");
  double total = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) total += angular_distance(samples[i - 1].dir, samples[i].dir);
  return rad2deg(total);
}

struct Condition {
  FilterMode interface = FilterMode::immediate();
  TaskKind kind = TaskKind::peg_transfer;
  Level level = Level::easy;

  std::string label() const { return interface.label() + "/" + task_folder(kind, level); }
  friend bool operator==(const Condition&, const Condition&) = default;
};

enum class Design { within, between_task };

inline Design design_from(std::string_view s) {
  if (s == "within") return Design::within;
  if (s == "between_task" || s == "between") return Design::between_task;
  throw std::invalid_argument("unknown design '" + std::string(s) + "'");
}
inline const char* to_string(Design d) { return d == Design::within ? "within" : "between_task"; }

/// Williams balanced Latin square: n rows for even n, 2n for odd n. Each row is an order
/// of 0..n-1 in which every ordered pair of neighbours occurs equally often across rows.
inline std::vector<std::vector<int>> balanced_latin_square(int n) {
  std::vector<int> first;
  for (int k = 0, lo = 1, hi = n - 1; k < n; ++k) {
    if (k == 0) first.push_back(0);
    else if (k % 2 == 1) first.push_back(lo++);
    else first.push_back(hi--);
  }
  std::vector<std::vector<int>> rows;
  for (int r = 0; r < n; ++r) {
    std::vector<int> row;
    for (int c : first) row.push_back((c + r) % n);
    rows.push_back(std::move(row));
  }
  if (n % 2 == 1)
    for (int r = 0; r < n; ++r) rows.emplace_back(rows[static_cast<std::size_t>(r)].rbegin(), rows[static_cast<std::size_t>(r)].rend());
  return rows;
}

/// The full 5 x 6 matrix in canonical order.
inline std::vector<Condition> condition_matrix() {
  std::vector<Condition> out;
  for (const auto& f : interface_conditions())
    for (TaskKind k : {TaskKind::peg_transfer, TaskKind::thread_passing})
      for (Level l : {Level::easy, Level::medium, Level::hard}) out.push_back({f, k, l});
  return out;
}

/// Per-participant trial order. Interface blocks follow row (participant mod 10) of the
/// 5-condition balanced square; tasks within block b follow row (participant + b) of the
/// task square. BetweenTask assigns peg to even ids and thread to odd ids.
inline std::vector<Condition> condition_schedule(int participant, Design design) {
  const auto interfaces = interface_conditions();
  const auto iface_rows = balanced_latin_square(5);
  const auto pid = static_cast<std::size_t>(participant < 0 ? -participant : participant);
  const auto& iface_order = iface_rows[pid % iface_rows.size()];

  std::vector<std::pair<TaskKind, Level>> tasks;
  if (design == Design::within) {
    for (TaskKind k : {TaskKind::peg_transfer, TaskKind::thread_passing})
      for (Level l : {Level::easy, Level::medium, Level::hard}) tasks.emplace_back(k, l);
  } else {
    const TaskKind k = pid % 2 == 0 ? TaskKind::peg_transfer : TaskKind::thread_passing;
    for (Level l : {Level::easy, Level::medium, Level::hard}) tasks.emplace_back(k, l);
  }
  const auto task_rows = balanced_latin_square(static_cast<int>(tasks.size()));

  std::vector<Condition> out;
  for (std::size_t b = 0; b < iface_order.size(); ++b) {
    const auto& task_order = task_rows[(pid + b) % task_rows.size()];
    for (int t : task_order) {
      const auto& [k, l] = tasks[static_cast<std::size_t>(t)];
      out.push_back({interfaces[static_cast<std::size_t>(iface_order[b])], k, l});
    }
  }
  return out;
}

struct TrialResult {
  std::string trial_id;
  Condition condition;
  std::uint64_t seed = 0;
  std::string status = "completed";  // or "aborted"
  double time_ms = 0.0;
  double precision_mean = std::numeric_limits<double>::infinity();
  double accuracy = 0.0;
  double head_path_deg = 0.0;
  std::size_t matched = 0;
  std::size_t expected = 0;
  ScoringParams scoring;
  std::string event_log_ref;
  std::string diagnostics;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

inline void to_json(nlohmann::json& j, const Condition& c) {
  j = {{"interface", c.interface.label()}, {"task", to_string(c.kind)}, {"level", to_string(c.level)}};
}
inline void from_json(const nlohmann::json& j, Condition& c) {
  c.interface = FilterMode::parse(j.at("interface").get<std::string>());
  c.kind = task_kind_from(j.at("task").get<std::string>());
  c.level = level_from(j.at("level").get<std::string>());
}

inline void to_json(nlohmann::json& j, const ScoringParams& s) {
  j = {{"match_threshold", s.match_threshold}, {"arrow_angle_deg", s.arrow_angle_deg}};
}
inline void from_json(const nlohmann::json& j, ScoringParams& s) {
  s.match_threshold = j.value("match_threshold", 0.05);
  s.arrow_angle_deg = j.value("arrow_angle_deg", 30.0);
}

/// Precision is null when nothing was matched (infinite mean distance).
inline void to_json(nlohmann::json& j, const TrialResult& r) {
  j = {{"trial_id", r.trial_id},
       {"condition", r.condition},
       {"seed", r.seed},
       {"status", r.status},
       {"time_ms", r.time_ms},
       {"precision_mean", nullptr},
       {"accuracy", r.accuracy},
       {"head_path_deg", r.head_path_deg},
       {"matched", r.matched},
       {"expected", r.expected},
       {"scoring", r.scoring},
       {"event_log_ref", r.event_log_ref}};
  if (std::isfinite(r.precision_mean)) j["precision_mean"] = r.precision_mean;
  if (!r.diagnostics.empty()) j["diagnostics"] = r.diagnostics;
}

inline void from_json(const nlohmann::json& j, TrialResult& r) {
  r.trial_id = j.at("trial_id").get<std::string>();
  r.condition = j.at("condition").get<Condition>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.status = j.at("status").get<std::string>();
  r.time_ms = j.at("time_ms").get<double>();
  const auto& pm = j.at("precision_mean");
  r.precision_mean = pm.is_null() ? std::numeric_limits<double>::infinity() : pm.get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.head_path_deg = j.at("head_path_deg").get<double>();
  r.matched = j.at("matched").get<std::size_t>();
  r.expected = j.at("expected").get<std::size_t>();
  r.scoring = j.at("scoring").get<ScoringParams>();
  r.event_log_ref = j.at("event_log_ref").get<std::string>();
  r.diagnostics = j.value("diagnostics", std::string());
}

inline std::string results_csv(const std::vector<TrialResult>& results) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "trial_id,interface,task,level,seed,status,time_ms,precision_mean,accuracy,head_path_deg,"
         "matched,expected,match_threshold,arrow_angle_deg,event_log_ref\n";
  for (const auto& r : results) {
    out << r.trial_id << ',' << r.condition.interface.label() << ',' << to_string(r.condition.kind) << ','
        << to_string(r.condition.level) << ',' << r.seed << ',' << r.status << ',' << num(r.time_ms) << ','
        << (std::isfinite(r.precision_mean) ? num(r.precision_mean) : std::string()) << ','
        << num(r.accuracy) << ',' << num(r.head_path_deg) << ',' << r.matched << ',' << r.expected << ','
        << num(r.scoring.match_threshold) << ',' << num(r.scoring.arrow_angle_deg) << ','
        << r.event_log_ref << '\n';
  }
  return out.str();
}

}  // namespace lapgaze
