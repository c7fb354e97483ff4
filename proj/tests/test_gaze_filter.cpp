#include <gtest/gtest.h>

#include <random>

#include "lapgaze/gaze_filter.hpp"
#include "oracles.hpp"

using namespace lapgaze;

namespace {

std::vector<GazeSample> random_trace(std::mt19937_64& rng, std::size_t n, double step = 0.05) {
  std::normal_distribution<double> jitter(0.0, step);
  std::uniform_real_distribution<double> dt(1.0, 30.0);
  std::vector<GazeSample> out;
  double t = 0.0;
  Direction d{jitter(rng) * 20, jitter(rng) * 5};
  for (std::size_t i = 0; i < n; ++i) {
    t += dt(rng);
    d = normalized({d.yaw + jitter(rng), std::clamp(d.pitch + jitter(rng), -1.2, 1.2)});
    out.push_back({t, d});
  }
  return out;
}

}  // namespace

TEST(FilterMode, LabelsRoundTrip) {
  for (const auto& m : interface_conditions()) EXPECT_EQ(FilterMode::parse(m.label()).label(), m.label());
  EXPECT_EQ(FilterMode::average(10).label(), "average-10");
  EXPECT_EQ(FilterMode::scaled(0.5).label(), "scaled-0.5");
  EXPECT_THROW(FilterMode::average(0), std::invalid_argument);
  EXPECT_THROW(FilterMode::scaled(0.0), std::invalid_argument);
  EXPECT_THROW(FilterMode::scaled(1.5), std::invalid_argument);
  EXPECT_THROW(FilterMode::parse("median-3"), std::invalid_argument);
  EXPECT_THROW(FilterMode::parse("average-x"), std::invalid_argument);
}

TEST(ReticleFilter, ImmediateIsIdentity) {
  std::mt19937_64 rng(10);
  ReticleFilter f(FilterMode::immediate(), {});
  for (const auto& s : random_trace(rng, 2000)) EXPECT_EQ(f.push(s), s.dir);
}

TEST(ReticleFilter, AverageMatchesComplexMeanOracle) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 2u, 10u, 30u}) {
    const Direction init{0.1, -0.05};
    ReticleFilter f(FilterMode::average(n), init);
    std::vector<oracle::Dir> window{{init.yaw, init.pitch}};
    for (const auto& s : random_trace(rng, 500)) {
      window.push_back({s.dir.yaw, s.dir.pitch});
      if (window.size() > n) window.erase(window.begin());
      const Direction r = f.push(s);
      const oracle::Dir o = oracle::window_mean(window);
      EXPECT_NEAR(oracle::angle_diff(r.yaw, o.yaw), 0.0, 1e-9);
      EXPECT_NEAR(r.pitch, o.pitch, 1e-9);
    }
  }
}

TEST(ReticleFilter, AverageHandlesSeam) {
  ReticleFilter f(FilterMode::average(2), {kPi - 0.01, 0});
  const Direction r = f.push({1, {-kPi + 0.01, 0}});
  EXPECT_NEAR(std::abs(r.yaw), kPi, 1e-12);  // not 0
}

TEST(ReticleFilter, AverageStepSettlesExactlyAfterWindow) {
  for (std::size_t n : {10u, 30u}) {
    ReticleFilter f(FilterMode::average(n), {0, 0});
    const Direction step{0.2, -0.1};
    Direction r;
    for (std::size_t i = 1; i <= n; ++i) {
      r = f.push({static_cast<double>(i), step});
      if (i < n) {
        EXPECT_NE(r, step);
      }
    }
    EXPECT_EQ(r, step);
  }
}

TEST(ReticleFilter, ScaledDisplacementRatio) {
  for (double ratio : {0.8, 0.5, 1.0}) {
    for (int axis = 0; axis < 2; ++axis) {
      ReticleFilter f(FilterMode::scaled(ratio), {});
      Direction r;
      for (int i = 1; i <= 100; ++i) {
        const double a = deg2rad(0.3 * i);
        r = f.push({static_cast<double>(i), axis == 0 ? Direction{a, 0} : Direction{0, a}});
      }
      const double head = deg2rad(30.0);
      EXPECT_NEAR((axis == 0 ? r.yaw : r.pitch) / head, ratio, 1e-9);
    }
  }
}

TEST(ReticleFilter, ScaledRecenterAndWrap) {
  ReticleFilter f(FilterMode::scaled(0.5), {kPi - 0.1, 0});
  const Direction r = f.push({1, {-kPi + 0.1, 0}});  // crosses the seam by +0.2
  EXPECT_NEAR(wrap_angle(r.yaw - (kPi - 0.1)), 0.1, 1e-12);
  EXPECT_TRUE(f.recenter());
  EXPECT_EQ(f.reticle(), f.last_head());
  ReticleFilter g(FilterMode::average(10), {});
  EXPECT_FALSE(g.recenter());
}

TEST(ReticleFilter, RejectsNonMonotonicTime) {
  ReticleFilter f(FilterMode::immediate(), {});
  f.push({5, {0.1, 0}});
  EXPECT_THROW(f.push({5, {0.2, 0}}), NonMonotonicTimestamp);
  try {
    f.push({4, {0.2, 0}});
  } catch (const NonMonotonicTimestamp& e) {
    EXPECT_EQ(e.last_t(), 5.0);
    EXPECT_EQ(e.t(), 4.0);
  }
  EXPECT_EQ(f.reticle(), (Direction{0.1, 0}));  // rejected sample left no trace
  EXPECT_NO_THROW(f.push({6, {0.2, 0}}));
}

TEST(ReticleFilter, WindowBounded) {
  std::mt19937_64 rng(12);
  ReticleFilter f(FilterMode::average(10), {});
  for (const auto& s : random_trace(rng, 100)) {
    f.push(s);
    EXPECT_LE(f.window().size(), 10u);
  }
}
