#pragma once

// Minimal RGB8 canvas used for screenshot compositing and task solution images.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lapgaze {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kMarkerRed{230, 30, 30};
inline constexpr Rgb kSketchYellow{250, 220, 40};
inline constexpr Rgb kReferenceGreen{40, 200, 60};

class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {})
      : width_(width), height_(height), rgb_(static_cast<std::size_t>(width) * height * 3) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
    for (std::size_t i = 0; i < rgb_.size(); i += 3) {
      rgb_[i] = fill.r;
      rgb_[i + 1] = fill.g;
      rgb_[i + 2] = fill.b;
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return rgb_.empty(); }
  const std::vector<std::uint8_t>& data() const { return rgb_; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {rgb_[i], rgb_[i + 1], rgb_[i + 2]};
  }

  void set(int x, int y, Rgb c) {
    if (!contains(x, y)) return;
    const std::size_t i = index(x, y);
    rgb_[i] = c.r;
    rgb_[i + 1] = c.g;
    rgb_[i + 2] = c.b;
  }

  std::size_t count(Rgb c) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < rgb_.size(); i += 3)
      n += rgb_[i] == c.r && rgb_[i + 1] == c.g && rgb_[i + 2] == c.b;
    return n;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> rgb_;
};

/// Bresenham segment, 8-connected, endpoints included.
inline void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    img.set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

inline int to_pixel(double v) { return static_cast<int>(std::lround(v)); }

inline void draw_line(Image& img, double x0, double y0, double x1, double y1, Rgb c) {
  draw_line(img, to_pixel(x0), to_pixel(y0), to_pixel(x1), to_pixel(y1), c);
}

/// Circle outline, midpoint algorithm on the rounded center and radius.
inline void draw_circle(Image& img, double cx, double cy, double radius, Rgb c) {
  if (radius <= 0.0) return;
  const int x0 = to_pixel(cx), y0 = to_pixel(cy), r = std::max(1, to_pixel(radius));
  int x = r, y = 0, err = 1 - r;
  while (x >= y) {
    for (auto [dx, dy] : {std::pair{x, y}, {y, x}, {-y, x}, {-x, y}, {-x, -y}, {-y, -x}, {y, -x}, {x, -y}})
      img.set(x0 + dx, y0 + dy, c);
    ++y;
    if (err < 0) {
      err += 2 * y + 1;
    } else {
      --x;
      err += 2 * (y - x) + 1;
    }
  }
}

inline void fill_disc(Image& img, double cx, double cy, double radius, Rgb c) {
  const int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
  const int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (std::hypot(x - cx, y - cy) <= radius) img.set(x, y, c);
}

/// Arrow with its head at (hx, hy): shaft plus two barbs.
inline void draw_arrow(Image& img, double hx, double hy, double tx, double ty, double barb, Rgb c) {
  draw_line(img, tx, ty, hx, hy, c);
  const double len = std::hypot(tx - hx, ty - hy);
  if (len <= 0.0) return;
  const double ux = (tx - hx) / len, uy = (ty - hy) / len;
  const double cs = std::cos(0.5), sn = std::sin(0.5);
  draw_line(img, hx, hy, hx + barb * (ux * cs - uy * sn), hy + barb * (ux * sn + uy * cs), c);
  draw_line(img, hx, hy, hx + barb * (ux * cs + uy * sn), hy + barb * (-ux * sn + uy * cs), c);
}

/// Uncompressed 24-bit BMP, bottom-up rows.
inline std::string encode_bmp(const Image& img) {
  const int w = img.width(), h = img.height();
  const int row = (w * 3 + 3) & ~3;
  const std::uint32_t pixels = static_cast<std::uint32_t>(row) * h;
  const std::uint32_t file_size = 54 + pixels;
  std::string out(file_size, '\0');
  auto put16 = [&](std::size_t at, std::uint16_t v) {
    out[at] = static_cast<char>(v & 0xff);
    out[at + 1] = static_cast<char>(v >> 8);
  };
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
  };
  out[0] = 'B';
  out[1] = 'M';
  put32(2, file_size);
  put32(10, 54);
  put32(14, 40);
  put32(18, static_cast<std::uint32_t>(w));
  put32(22, static_cast<std::uint32_t>(h));
  put16(26, 1);
  put16(28, 24);
  put32(34, pixels);
  put32(38, 2835);
  put32(42, 2835);
  for (int y = 0; y < h; ++y) {
    std::size_t at = 54 + static_cast<std::size_t>(h - 1 - y) * row;
    for (int x = 0; x < w; ++x) {
      const Rgb p = img.at(x, y);
      out[at++] = static_cast<char>(p.b);
      out[at++] = static_cast<char>(p.g);
      out[at++] = static_cast<char>(p.r);
    }
  }
  return out;
}

}  // namespace lapgaze
