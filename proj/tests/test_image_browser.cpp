#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "lapgaze/image_browser.hpp"

using namespace lapgaze;

namespace {

Folder folder(const std::string& name, int n) {
  Folder f{name, {}};
  for (int i = 0; i < n; ++i) f.images.push_back({name + std::to_string(i), "file:/x/" + std::to_string(i)});
  return f;
}

}  // namespace

TEST(ImageLibrary, AlwaysHasSortedCaptures) {
  const ImageLibrary lib({folder("zeta", 1), folder("alpha", 2)});
  ASSERT_EQ(lib.folders().size(), 3u);
  EXPECT_EQ(lib.folders()[0].name, "alpha");
  EXPECT_EQ(lib.folders()[1].name, kCapturesFolder);
  EXPECT_EQ(lib.folders()[2].name, "zeta");
}

TEST(ImageLibrary, LoadsDirectoryTree) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "lapgaze_lib_test";
  fs::remove_all(root);
  fs::create_directories(root / "b_cases");
  fs::create_directories(root / "a_anatomy");
  for (const char* f : {"b_cases/2.png", "b_cases/1.JPG", "b_cases/notes.txt", "a_anatomy/x.bmp"})
    std::ofstream(root / f) << "x";
  const ImageLibrary lib = ImageLibrary::load(root);
  ASSERT_EQ(lib.folders().size(), 3u);
  const Folder& cases = lib.at(*lib.find("b_cases"));
  ASSERT_EQ(cases.images.size(), 2u);
  EXPECT_EQ(cases.images[0].name, "1.JPG");
  EXPECT_EQ(cases.images[0].uri.rfind("file:", 0), 0u);
  fs::remove_all(root);
}

TEST(ImageBrowser, NavigateFolderGridImage) {
  ImageBrowser b(ImageLibrary({folder("cases", 20)}));
  EXPECT_EQ(b.state().mode, BrowserState::Mode::folder_grid);
  EXPECT_EQ(b.back().status, Status::ignored);
  EXPECT_TRUE(b.select_cell(1).ok());  // "cases" (captures is cell 0)
  EXPECT_EQ(b.state().folder, "cases");
  EXPECT_EQ(b.grid_pages(), 3u);
  b.grid_page(Page::next);
  b.grid_page(Page::next);
  b.grid_page(Page::next);  // clamped
  EXPECT_EQ(b.state().page, 2u);
  EXPECT_EQ(b.select_cell(5).status, Status::rejected);  // only 2 items on the last page
  EXPECT_TRUE(b.select_cell(1).ok());
  EXPECT_EQ(b.state().mode, BrowserState::Mode::full_image);
  EXPECT_EQ(b.state().index, 19u);
  b.page(Page::next);  // clamped at the end
  EXPECT_EQ(b.state().index, 19u);
  b.page(Page::prev);
  EXPECT_EQ(b.state().index, 18u);
  EXPECT_TRUE(b.back().ok());
  EXPECT_EQ(b.state().mode, BrowserState::Mode::image_grid);
  EXPECT_EQ(b.state().page, 2u);
  EXPECT_TRUE(b.back().ok());
  EXPECT_EQ(b.state(), BrowserState{});
}

TEST(ImageBrowser, ReplacingFolderKeepsStateValid) {
  ImageBrowser b(ImageLibrary({folder("task", 5)}));
  b.select_folder("task");
  b.select_image(4);
  b.put_folder(folder("task", 2));
  EXPECT_EQ(b.state().mode, BrowserState::Mode::image_grid);
  b.append_capture({"capture-1", "capture:1"});
  EXPECT_EQ(b.library().at(*b.library().find(kCapturesFolder)).images.size(), 1u);
}

TEST(ImageBrowser, RandomWalkKeepsIndicesInBounds) {
  std::mt19937_64 rng(40);
  ImageBrowser b(ImageLibrary({folder("a", 0), folder("b", 9), folder("c", 23), folder("d", 1)}));
  std::uniform_int_distribution<int> op(0, 7), cell(0, 10);
  for (int i = 0; i < 100000; ++i) {
    switch (op(rng)) {
      case 0: b.select_cell(static_cast<std::size_t>(cell(rng))); break;
      case 1: b.back(); break;
      case 2: b.page(Page::next); break;
      case 3: b.page(Page::prev); break;
      case 4: b.grid_page(Page::next); break;
      case 5: b.grid_page(Page::prev); break;
      case 6: b.append_capture({"c", "capture:x"}); break;
      case 7: b.put_folder(folder("c", cell(rng) * 3)); break;
    }
    const auto& s = b.state();
    ASSERT_LT(s.page, b.grid_pages());
    if (s.mode != BrowserState::Mode::folder_grid) {
      const auto f = b.library().find(s.folder);
      ASSERT_TRUE(f);
      if (s.mode == BrowserState::Mode::full_image) {
        ASSERT_LT(s.index, b.library().at(*f).images.size());
      }
    }
  }
}

TEST(ImageBrowserJson, RoundTrip) {
  const BrowserState s{BrowserState::Mode::full_image, "cases", 3, 0};
  const nlohmann::json j = s;
  EXPECT_EQ(j["mode"], "full_image");
  EXPECT_EQ(j.get<BrowserState>(), s);
  const Folder f = folder("x", 2);
  EXPECT_EQ(nlohmann::json(f).get<Folder>().images, f.images);
}
