#pragma once

// Image panel navigation: folder grid -> image grid -> full image.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lapgaze/outcome.hpp"

namespace lapgaze {

inline constexpr const char* kCapturesFolder = "captures";

/// `uri` is "file:<path>", "task:<folder>/<n>" or "capture:<id>".
struct ImageRef {
  std::string name;
  std::string uri;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct Folder {
  std::string name;
  std::vector<ImageRef> images;

  friend bool operator==(const Folder&, const Folder&) = default;
};

/// Folders sorted by name; the captures folder always exists.
class ImageLibrary {
 public:
  ImageLibrary() { ensure(kCapturesFolder); }

  explicit ImageLibrary(std::vector<Folder> folders) {
    for (auto& f : folders) put(std::move(f));
    ensure(kCapturesFolder);
  }

  /// One folder per subdirectory of `root`, raster files sorted by name.
  static ImageLibrary load(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    static const std::vector<std::string> exts{".png", ".jpg", ".jpeg", ".bmp", ".gif",
                                               ".ppm", ".pgm", ".tif", ".tiff", ".webp"};
    std::vector<Folder> folders;
    for (const auto& dir : fs::directory_iterator(root)) {
      if (!dir.is_directory()) continue;
      Folder f{dir.path().filename().string(), {}};
      for (const auto& file : fs::directory_iterator(dir.path())) {
        if (!file.is_regular_file()) continue;
        std::string ext = file.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
        f.images.push_back({file.path().filename().string(), "file:" + fs::absolute(file.path()).string()});
      }
      std::sort(f.images.begin(), f.images.end(),
                [](const ImageRef& a, const ImageRef& b) { return a.name < b.name; });
      folders.push_back(std::move(f));
    }
    return ImageLibrary(std::move(folders));
  }

  const std::vector<Folder>& folders() const { return folders_; }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < folders_.size(); ++i)
      if (folders_[i].name == name) return i;
    return std::nullopt;
  }

  const Folder& at(std::size_t i) const { return folders_.at(i); }

  /// Inserts or replaces a folder by name.
  void put(Folder f) {
    if (auto i = find(f.name)) {
      folders_[*i] = std::move(f);
      return;
    }
    auto pos = std::lower_bound(folders_.begin(), folders_.end(), f.name,
                                [](const Folder& a, const std::string& n) { return a.name < n; });
    folders_.insert(pos, std::move(f));
  }

  void append_capture(ImageRef ref) { folders_[*find(kCapturesFolder)].images.push_back(std::move(ref)); }

  friend bool operator==(const ImageLibrary&, const ImageLibrary&) = default;

 private:
  void ensure(const std::string& name) {
    if (!find(name)) put({name, {}});
  }

  std::vector<Folder> folders_;
};

enum class Page { next, prev };

struct BrowserState {
  enum class Mode { folder_grid, image_grid, full_image };
  Mode mode = Mode::folder_grid;
  std::string folder;     // image_grid / full_image
  std::size_t index = 0;  // full_image
  std::size_t page = 0;   // grid page

  friend bool operator==(const BrowserState&, const BrowserState&) = default;
};

inline const char* to_string(BrowserState::Mode m) {
  switch (m) {
    case BrowserState::Mode::folder_grid: return "folder_grid";
    case BrowserState::Mode::image_grid: return "image_grid";
    case BrowserState::Mode::full_image: return "full_image";
  }
  return "?";
}

class ImageBrowser {
 public:
  static constexpr std::size_t kGridCells = 9;  // 3x3 thumbnails per page

  explicit ImageBrowser(ImageLibrary lib = {}) : lib_(std::move(lib)) {}

  const BrowserState& state() const { return st_; }
  const ImageLibrary& library() const { return lib_; }

  /// Number of items shown by the current grid (folders or images).
  std::size_t grid_items() const {
    if (st_.mode == BrowserState::Mode::folder_grid) return lib_.folders().size();
    return current_folder().images.size();
  }

  std::size_t grid_pages() const { return std::max<std::size_t>(1, (grid_items() + kGridCells - 1) / kGridCells); }

  Outcome select_folder(const std::string& name) {
    if (st_.mode != BrowserState::Mode::folder_grid) return Outcome::rejected("not in folder grid");
    if (!lib_.find(name)) return Outcome::rejected("no folder '" + name + "'");
    st_ = {BrowserState::Mode::image_grid, name, 0, 0};
    return Outcome::applied();
  }

  Outcome select_folder(std::size_t i) {
    if (i >= lib_.folders().size()) return Outcome::rejected("folder index out of range");
    return select_folder(lib_.at(i).name);
  }

  Outcome select_image(std::size_t i) {
    if (st_.mode != BrowserState::Mode::image_grid) return Outcome::rejected("not in image grid");
    if (i >= current_folder().images.size()) return Outcome::rejected("image index out of range");
    st_.mode = BrowserState::Mode::full_image;
    st_.index = i;
    return Outcome::applied();
  }

  /// Selects the item under grid cell `cell` of the current page.
  Outcome select_cell(std::size_t cell) {
    if (cell >= kGridCells) return Outcome::rejected("cell out of range");
    const std::size_t item = st_.page * kGridCells + cell;
    if (st_.mode == BrowserState::Mode::folder_grid) return select_folder(item);
    if (st_.mode == BrowserState::Mode::image_grid) return select_image(item);
    return Outcome::rejected("no grid in full image view");
  }

  Outcome back() {
    switch (st_.mode) {
      case BrowserState::Mode::full_image:
        st_.mode = BrowserState::Mode::image_grid;
        st_.page = st_.index / kGridCells;
        st_.index = 0;
        return Outcome::applied();
      case BrowserState::Mode::image_grid:
        st_ = {};
        return Outcome::applied();
      case BrowserState::Mode::folder_grid:
        return Outcome::ignored("already at folder grid");
    }
    return Outcome::ignored("?");
  }

  /// Next/previous image in full view, clamped at the ends.
  Outcome page(Page dir) {
    if (st_.mode != BrowserState::Mode::full_image) return Outcome::ignored("paging needs full image view");
    const std::size_t n = current_folder().images.size();
    if (dir == Page::next && st_.index + 1 < n) ++st_.index;
    if (dir == Page::prev && st_.index > 0) --st_.index;
    return Outcome::applied();
  }

  /// Next/previous grid page, clamped.
  Outcome grid_page(Page dir) {
    if (st_.mode == BrowserState::Mode::full_image) return Outcome::ignored("no grid in full image view");
    if (dir == Page::next && st_.page + 1 < grid_pages()) ++st_.page;
    if (dir == Page::prev && st_.page > 0) --st_.page;
    return Outcome::applied();
  }

  /// Replaces or adds a folder, keeping the view state valid.
  void put_folder(Folder f) {
    lib_.put(std::move(f));
    revalidate();
  }

  void append_capture(ImageRef ref) {
    lib_.append_capture(std::move(ref));
    revalidate();
  }

  void restore(ImageLibrary lib, BrowserState st) {
    lib_ = std::move(lib);
    st_ = std::move(st);
    revalidate();
  }

 private:
  const Folder& current_folder() const { return lib_.at(*lib_.find(st_.folder)); }

  void revalidate() {
    if (st_.mode != BrowserState::Mode::folder_grid && !lib_.find(st_.folder)) {
      st_ = {};
      return;
    }
    if (st_.mode == BrowserState::Mode::full_image && st_.index >= current_folder().images.size()) {
      st_.mode = BrowserState::Mode::image_grid;
      st_.index = 0;
    }
    st_.page = std::min(st_.page, grid_pages() - 1);
  }

  ImageLibrary lib_;
  BrowserState st_;
};

inline void to_json(nlohmann::json& j, const ImageRef& r) { j = {{"name", r.name}, {"uri", r.uri}}; }
inline void from_json(const nlohmann::json& j, ImageRef& r) {
  r.name = j.at("name").get<std::string>();
  r.uri = j.at("uri").get<std::string>();
}
inline void to_json(nlohmann::json& j, const Folder& f) { j = {{"name", f.name}, {"images", f.images}}; }
inline void from_json(const nlohmann::json& j, Folder& f) {
  f.name = j.at("name").get<std::string>();
  f.images = j.at("images").get<std::vector<ImageRef>>();
}

inline void to_json(nlohmann::json& j, const BrowserState& s) {
  j = {{"mode", to_string(s.mode)}, {"folder", s.folder}, {"index", s.index}, {"page", s.page}};
}
inline void from_json(const nlohmann::json& j, BrowserState& s) {
  const std::string m = j.at("mode").get<std::string>();
  if (m == "folder_grid") s.mode = BrowserState::Mode::folder_grid;
  else if (m == "image_grid") s.mode = BrowserState::Mode::image_grid;
  else if (m == "full_image") s.mode = BrowserState::Mode::full_image;
  else throw nlohmann::json::other_error::create(501, "unknown browser mode '" + m + "'", &j);
  s.folder = j.at("folder").get<std::string>();
  s.index = j.at("index").get<std::size_t>();
  s.page = j.at("page").get<std::size_t>();
}

}  // namespace lapgaze
