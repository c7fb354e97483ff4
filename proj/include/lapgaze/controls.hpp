#pragma once

// Virtual controller placement on the video and image panels (panel uv space).
//
// Video panel: a controller bar along the bottom edge holds, left to right,
// screenshot | clear sketch | clear markers | annotate. Everything above the bar
// is the annotatable video area.
//
// Image panel: a top bar with back | (gap) | previous page | next page, and
// below it a 3x3 thumbnail grid, or the full image.

#include <optional>
#include <variant>

#include "lapgaze/geometry.hpp"

namespace lapgaze {

enum class VideoButton { screenshot, clear_sketch, clear_markers, annotate };

inline const char* to_string(VideoButton b) {
  switch (b) {
    case VideoButton::screenshot: return "screenshot";
    case VideoButton::clear_sketch: return "clear_sketch";
    case VideoButton::clear_markers: return "clear_markers";
    case VideoButton::annotate: return "annotate";
  }
  return "?";
}

struct VideoControls {
  static constexpr double kBarTop = 0.9;
  static constexpr int kButtons = 4;

  static bool in_bar(Uv uv) { return uv.v >= kBarTop; }

  static std::optional<VideoButton> button_at(Uv uv) {
    if (!in_bar(uv)) return std::nullopt;
    int i = static_cast<int>(uv.u * kButtons);
    if (i >= kButtons) i = kButtons - 1;
    return static_cast<VideoButton>(i);
  }

  static Uv button_center(VideoButton b) {
    return {(static_cast<int>(b) + 0.5) / kButtons, (1.0 + kBarTop) / 2.0};
  }
};

namespace image_target {
struct Back {};
struct GridPrev {};
struct GridNext {};
struct Cell {
  std::size_t index;
};
struct Picture {};  // the full-size image
struct Nothing {};
}  // namespace image_target

using ImageTarget = std::variant<image_target::Nothing, image_target::Back, image_target::GridPrev,
                                 image_target::GridNext, image_target::Cell, image_target::Picture>;

struct ImageControls {
  static constexpr double kBarBottom = 0.15;
  static constexpr int kCols = 3;
  static constexpr int kRows = 3;

  static ImageTarget target_at(Uv uv, bool full_image) {
    if (uv.v < kBarBottom) {
      if (uv.u < 0.25) return image_target::Back{};
      if (full_image) return image_target::Nothing{};
      if (uv.u >= 0.5 && uv.u < 0.75) return image_target::GridPrev{};
      if (uv.u >= 0.75) return image_target::GridNext{};
      return image_target::Nothing{};
    }
    if (full_image) return image_target::Picture{};
    const double gv = (uv.v - kBarBottom) / (1.0 - kBarBottom);
    int col = static_cast<int>(uv.u * kCols), row = static_cast<int>(gv * kRows);
    if (col >= kCols) col = kCols - 1;
    if (row >= kRows) row = kRows - 1;
    return image_target::Cell{static_cast<std::size_t>(row * kCols + col)};
  }

  static Uv back_center() { return {0.125, kBarBottom / 2.0}; }
  static Uv grid_prev_center() { return {0.625, kBarBottom / 2.0}; }
  static Uv grid_next_center() { return {0.875, kBarBottom / 2.0}; }
  static Uv cell_center(std::size_t cell) {
    const double col = static_cast<double>(cell % kCols), row = static_cast<double>(cell / kCols);
    return {(col + 0.5) / kCols, kBarBottom + (row + 0.5) / kRows * (1.0 - kBarBottom)};
  }
  static Uv picture_center() { return {0.5, (1.0 + kBarBottom) / 2.0}; }
};

}  // namespace lapgaze
