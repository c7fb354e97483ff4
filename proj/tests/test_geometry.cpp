#include <gtest/gtest.h>

#include <random>

#include "lapgaze/geometry.hpp"
#include "oracles.hpp"

using namespace lapgaze;

TEST(Geometry, WrapAngleRange) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> any(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = any(rng);
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::remainder(a - w, 2 * kPi), 0.0, 1e-9);
  }
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
}

TEST(Geometry, VectorRoundTrip) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> yaw(-kPi + 1e-9, kPi), pitch(-1.5, 1.5);
  for (int i = 0; i < 10000; ++i) {
    const Direction d{yaw(rng), pitch(rng)};
    const Direction back = from_vector(to_vector(d));
    EXPECT_NEAR(wrap_angle(back.yaw - d.yaw), 0.0, 1e-12);
    EXPECT_NEAR(back.pitch, d.pitch, 1e-12);
  }
}

TEST(Geometry, RotationMapsForwardOntoDirection) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> yaw(-kPi, kPi), pitch(-1.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    const Direction d{yaw(rng), pitch(rng)};
    const Eigen::Matrix3d r = rotation_of(d);
    EXPECT_LT((r * Eigen::Vector3d::UnitZ() - to_vector(d)).norm(), 1e-12);
    EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    EXPECT_NEAR(r.col(0).y(), 0.0, 1e-12);  // no roll: right axis stays horizontal
  }
}

TEST(Geometry, AngularDistanceMatchesHaversine) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> yaw(-kPi, kPi), pitch(-1.5, 1.5);
  for (int i = 0; i < 10000; ++i) {
    const Direction a{yaw(rng), pitch(rng)}, b{yaw(rng), pitch(rng)};
    EXPECT_NEAR(angular_distance(a, b), oracle::haversine({a.yaw, a.pitch}, {b.yaw, b.pitch}), 1e-9);
  }
  EXPECT_NEAR(rad2deg(angular_distance({0, 0}, {deg2rad(10), 0})), 10.0, 1e-12);
  EXPECT_EQ(angular_distance({0.3, 0.2}, {0.3, 0.2}), 0.0);
}

TEST(Geometry, NormalizedClampsPitch) {
  const Direction d = normalized({3 * kPi, 2.0});
  EXPECT_NEAR(d.yaw, kPi, 1e-12);
  EXPECT_DOUBLE_EQ(d.pitch, kPi / 2);
}
