#pragma once

// Reticle stabilization for head-gaze pointing.
//
// Three filter families drive the reticle from the raw head direction:
//   immediate  reticle == head
//   average    mean of the last n head directions (per sample, not per second)
//   scaled     reticle moves r times the head delta, decoupled from view center

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lapgaze/geometry.hpp"
#include "lapgaze/outcome.hpp"

namespace lapgaze {

struct GazeSample {
  double t = 0.0;  // monotonic, milliseconds
  Direction dir;

  friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

class FilterMode {
 public:
  enum class Kind { immediate, average, scaled };

  static constexpr FilterMode immediate() { return FilterMode(Kind::immediate, 0, 1.0); }

  static FilterMode average(std::size_t window) {
    if (window == 0) throw std::invalid_argument("average filter window must be positive");
    return FilterMode(Kind::average, window, 1.0);
  }

  static FilterMode scaled(double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0))
      throw std::invalid_argument("scaled filter ratio must lie in (0, 1]");
    return FilterMode(Kind::scaled, 0, ratio);
  }

  constexpr Kind kind() const { return kind_; }
  constexpr std::size_t window() const { return window_; }
  constexpr double ratio() const { return ratio_; }

  /// Stable label: "immediate", "average-10", "scaled-0.8".
  std::string label() const {
    switch (kind_) {
      case Kind::immediate: return "immediate";
      case Kind::average: return "average-" + std::to_string(window_);
      case Kind::scaled: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "scaled-%g", ratio_);
        return buf;
      }
    }
    return "?";
  }

  static FilterMode parse(std::string_view text) {
    if (text == "immediate") return immediate();
    auto tail = [&](std::string_view prefix) -> std::optional<std::string> {
      if (text.substr(0, prefix.size()) == prefix) return std::string(text.substr(prefix.size()));
      return std::nullopt;
    };
    try {
      if (auto n = tail("average-")) {
        std::size_t used = 0;
        long long v = std::stoll(*n, &used);
        if (used == n->size() && v > 0) return average(static_cast<std::size_t>(v));
      } else if (auto r = tail("scaled-")) {
        std::size_t used = 0;
        double v = std::stod(*r, &used);
        if (used == r->size()) return scaled(v);
      }
    } catch (const std::logic_error&) {
    }
    throw std::invalid_argument("unknown filter mode '" + std::string(text) + "'");
  }

  friend constexpr bool operator==(const FilterMode&, const FilterMode&) = default;

 private:
  constexpr FilterMode(Kind k, std::size_t w, double r) : kind_(k), window_(w), ratio_(r) {}

  Kind kind_;
  std::size_t window_;
  double ratio_;
};

/// The five interface conditions of the experiment, in canonical order.
inline std::array<FilterMode, 5> interface_conditions() {
  return {FilterMode::immediate(), FilterMode::average(10), FilterMode::average(30),
          FilterMode::scaled(0.8), FilterMode::scaled(0.5)};
}

class ReticleFilter {
 public:
  ReticleFilter(FilterMode mode, Direction initial_head)
      : mode_(mode), reticle_(normalized(initial_head)), last_head_(reticle_) {
    if (mode_.kind() == FilterMode::Kind::average) window_.push_back({0.0, reticle_});
  }

  /// Ingests one head sample and returns the reticle direction.
  /// Throws NonMonotonicTimestamp if `sample.t` does not exceed the last ingested time.
  Direction push(const GazeSample& raw) {
    if (last_t_ && !(raw.t > *last_t_)) throw NonMonotonicTimestamp(*last_t_, raw.t);
    last_t_ = raw.t;
    const GazeSample sample{raw.t, normalized(raw.dir)};

    switch (mode_.kind()) {
      case FilterMode::Kind::immediate:
        reticle_ = sample.dir;
        break;
      case FilterMode::Kind::average:
        window_.push_back(sample);
        while (window_.size() > mode_.window()) window_.pop_front();
        reticle_ = window_mean();
        break;
      case FilterMode::Kind::scaled: {
        const double r = mode_.ratio();
        const double dyaw = wrap_angle(sample.dir.yaw - last_head_.yaw);
        const double dpitch = sample.dir.pitch - last_head_.pitch;
        reticle_ = normalized({reticle_.yaw + r * dyaw, reticle_.pitch + r * dpitch});
        break;
      }
    }
    last_head_ = sample.dir;
    return reticle_;
  }

  /// Snaps a scaled reticle back under the view center. Returns false (no-op) for other modes.
  bool recenter() {
    if (mode_.kind() != FilterMode::Kind::scaled) return false;
    reticle_ = last_head_;
    return true;
  }

  const FilterMode& mode() const { return mode_; }
  Direction reticle() const { return reticle_; }
  Direction last_head() const { return last_head_; }
  const std::deque<GazeSample>& window() const { return window_; }
  std::optional<double> last_t() const { return last_t_; }

 private:
  // Circular mean for yaw, arithmetic for pitch, both taken relative to the newest
  // sample so that a window of identical samples reproduces that sample exactly.
  Direction window_mean() const {
    const Direction ref = window_.back().dir;
    double s = 0.0, c = 0.0, dp = 0.0;
    for (const auto& w : window_) {
      const double dy = wrap_angle(w.dir.yaw - ref.yaw);
      s += std::sin(dy);
      c += std::cos(dy);
      dp += w.dir.pitch - ref.pitch;
    }
    const double n = static_cast<double>(window_.size());
    return normalized({ref.yaw + std::atan2(s, c), ref.pitch + dp / n});
  }

  FilterMode mode_;
  std::deque<GazeSample> window_;
  Direction reticle_;
  Direction last_head_;
  std::optional<double> last_t_;
};

}  // namespace lapgaze
