#pragma once

// Egocentric panel layout and reticle-to-panel hit testing.
//
// Every panel is a flat rectangle at a fixed distance from the head, facing the
// origin. A panel's pose is anchor * rotation_of(center_dir); the anchor is a
// world rotation that stays put unless follow mode is on, in which case it is
// carried rigidly by the head.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lapgaze/geometry.hpp"

namespace lapgaze {

enum class PanelKind { video, image, help_left, help_right };

inline const char* to_string(PanelKind k) {
  switch (k) {
    case PanelKind::video: return "video";
    case PanelKind::image: return "image";
    case PanelKind::help_left: return "help_left";
    case PanelKind::help_right: return "help_right";
  }
  return "?";
}

struct Panel {
  std::string id;
  PanelKind kind = PanelKind::video;
  Direction center_dir;   // relative to the scene anchor
  double distance = 1.5;  // meters
  double width = 0.0;     // meters
  double height = 0.0;    // meters
  bool interactive = true;

  double aspect() const { return width / height; }
};

struct PanelHit {
  std::size_t panel = 0;  // index into Scene::panels()
  std::string panel_id;
  PanelKind kind = PanelKind::video;
  Uv uv;
  double ray_t = 0.0;  // distance along the unit view ray
};

/// Angular panel sizes for the default layout, degrees.
struct LayoutOptions {
  double distance = 1.5;
  double video_w_deg = 28.0, video_h_deg = 18.0;
  double image_w_deg = 28.0, image_h_deg = 12.0;
  double help_w_deg = 12.0, help_h_deg = 18.0;
  double gap_deg = 1.5;
};

class Scene {
 public:
  explicit Scene(std::vector<Panel> panels) : panels_(std::move(panels)) {
    int videos = 0, images = 0;
    for (const auto& p : panels_) {
      if (!(p.width > 0 && p.height > 0 && p.distance > 0))
        throw std::invalid_argument("panel '" + p.id + "' needs positive width, height, distance");
      if ((p.kind == PanelKind::help_left || p.kind == PanelKind::help_right) && p.interactive)
        throw std::invalid_argument("help panel '" + p.id + "' cannot be interactive");
      videos += p.kind == PanelKind::video;
      images += p.kind == PanelKind::image;
    }
    if (videos != 1 || images != 1)
      throw std::invalid_argument("scene needs exactly one video and one image panel");
  }

  /// Video straight ahead, image panel right below, two help panels to the right.
  static Scene default_layout(const LayoutOptions& o = {}) {
    auto size = [&](double deg) { return 2.0 * o.distance * std::tan(deg2rad(deg) / 2.0); };
    const double image_pitch = -(o.video_h_deg / 2 + o.gap_deg + o.image_h_deg / 2);
    const double help1_yaw = o.video_w_deg / 2 + o.gap_deg + o.help_w_deg / 2;
    const double help2_yaw = help1_yaw + o.help_w_deg + o.gap_deg;
    std::vector<Panel> panels{
        {"video", PanelKind::video, {0.0, 0.0}, o.distance, size(o.video_w_deg),
         size(o.video_h_deg), true},
        {"image", PanelKind::image, {0.0, deg2rad(image_pitch)}, o.distance,
         size(o.image_w_deg), size(o.image_h_deg), true},
        {"help_left", PanelKind::help_left, {deg2rad(help1_yaw), 0.0}, o.distance,
         size(o.help_w_deg), size(o.help_h_deg), false},
        {"help_right", PanelKind::help_right, {deg2rad(help2_yaw), 0.0}, o.distance,
         size(o.help_w_deg), size(o.help_h_deg), false},
    };
    return Scene(std::move(panels));
  }

  const std::vector<Panel>& panels() const { return panels_; }
  const Eigen::Matrix3d& anchor() const { return anchor_; }
  bool follow() const { return follow_; }
  const Eigen::Matrix3d& follow_offset() const { return offset_; }

  std::size_t index_of(PanelKind kind) const {
    for (std::size_t i = 0; i < panels_.size(); ++i)
      if (panels_[i].kind == kind) return i;
    throw std::out_of_range(std::string("no panel of kind ") + to_string(kind));
  }
  const Panel& video() const { return panels_[index_of(PanelKind::video)]; }
  const Panel& image() const { return panels_[index_of(PanelKind::image)]; }

  /// World-space pose of a panel; columns are right, up, normal (toward the panel).
  Eigen::Matrix3d panel_frame(std::size_t i) const {
    return anchor_ * rotation_of(panels_.at(i).center_dir);
  }

  Direction world_center(std::size_t i) const { return from_vector(panel_frame(i).col(2)); }

  /// Intersection of the view ray with one panel, if it lands inside the rectangle.
  std::optional<PanelHit> intersect(std::size_t i, Direction dir) const {
    const Panel& p = panels_.at(i);
    const Eigen::Matrix3d f = panel_frame(i);
    const Eigen::Vector3d d = to_vector(dir);
    const double denom = d.dot(f.col(2));
    if (denom <= 1e-12) return std::nullopt;
    const double t = p.distance / denom;
    const Eigen::Vector3d local = t * d - p.distance * f.col(2);
    const double u = local.dot(f.col(0)) / p.width + 0.5;
    const double v = 0.5 - local.dot(f.col(1)) / p.height;
    if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) return std::nullopt;
    return PanelHit{i, p.id, p.kind, {u, v}, t};
  }

  /// Nearest panel under the ray (smallest ray parameter, then lowest index).
  std::optional<PanelHit> ray_hit(Direction dir) const {
    std::optional<PanelHit> best;
    for (std::size_t i = 0; i < panels_.size(); ++i) {
      auto h = intersect(i, dir);
      if (h && (!best || h->ray_t < best->ray_t)) best = std::move(h);
    }
    return best;
  }

  /// Inverse of intersect(): the view direction that lands on `uv` of panel i.
  Direction uv_to_direction(std::size_t i, Uv uv) const {
    const Panel& p = panels_.at(i);
    const Eigen::Matrix3d f = panel_frame(i);
    const Eigen::Vector3d point = p.distance * f.col(2) + (uv.u - 0.5) * p.width * f.col(0) -
                                  (uv.v - 0.5) * p.height * f.col(1);
    return from_vector(point);
  }

  /// Enabling captures the head-to-anchor offset; disabling freezes the anchor.
  void set_follow(bool on, Direction head) {
    if (on) offset_ = rotation_of(head).transpose() * anchor_;
    follow_ = on;
  }

  /// Per-frame update; carries the anchor with the head while following.
  void update_head(Direction head) {
    if (follow_) anchor_ = rotation_of(head) * offset_;
  }

  /// Head-relative offset of the anchor right now.
  Eigen::Matrix3d relative_offset(Direction head) const {
    return rotation_of(head).transpose() * anchor_;
  }

  void set_anchor(const Eigen::Matrix3d& a) { anchor_ = a; }

 private:
  std::vector<Panel> panels_;
  Eigen::Matrix3d anchor_ = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d offset_ = Eigen::Matrix3d::Identity();
  bool follow_ = false;
};

}  // namespace lapgaze
