#include <gtest/gtest.h>

#include <random>

#include "radmot/scenario.hpp"

namespace radmot {
namespace {

ScenarioConfig singleCar(double gamma) {
  ScenarioConfig cfg;
  cfg.clutterRate = 0;
  ScenarioObject o;
  o.position = {20, 0};
  o.velocity = {1, 0};
  o.extent = extentFromSize(4.5, 1.8);
  o.pointRate = gamma;
  cfg.objects = {o};
  return cfg;
}

TEST(Simulate, EmptySceneHasNoPoints) {
  ScenarioConfig cfg;
  cfg.clutterRate = 0;
  cfg.duration = 20;
  const auto frames = simulate(cfg);
  ASSERT_EQ(frames.size(), 20u);
  for (const auto& f : frames) {
    EXPECT_TRUE(f.points.empty());
    EXPECT_TRUE(f.groundTruth.empty());
    EXPECT_TRUE(f.detections.empty());
  }
}

TEST(Simulate, DeterministicGivenSeed) {
  auto cfg = roadsidePreset(defaultScenario(9));
  cfg.duration = 30;
  EXPECT_EQ(simulate(cfg), simulate(cfg));
  auto other = cfg;
  other.seed = 10;
  EXPECT_NE(simulate(cfg), simulate(other));
}

TEST(Simulate, PoissonMeanPointCount) {
  auto cfg = singleCar(8.0);
  cfg.duration = 1000;
  cfg.objects[0].velocity = {0, 0};
  double total = 0;
  for (const auto& f : simulate(cfg)) total += static_cast<double>(f.points.size());
  const double mean = total / 1000.0;
  EXPECT_GE(mean, 7.5);
  EXPECT_LE(mean, 8.5);
}

TEST(Simulate, ObjectPointsWithinFourSigma) {
  auto cfg = singleCar(30.0);
  cfg.duration = 50;
  cfg.objects[0].velocity = {2, 1};
  for (const auto& f : simulate(cfg)) {
    ASSERT_EQ(f.groundTruth.size(), 1u);
    const auto& b = f.groundTruth[0].box;
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    for (const auto& p : f.points) {
      const double dx = p.x - b.cx, dy = p.y - b.cy;
      const double u = (c * dx + s * dy) / (b.length / 4), v = (-s * dx + c * dy) / (b.width / 4);
      EXPECT_LE(u * u + v * v, 16.0 + 1e-9);
    }
  }
}

TEST(Simulate, GroundTruthIsContinuousOverLifetime) {
  auto cfg = defaultScenario(3);
  cfg.objects[0].birthFrame = 10;
  cfg.objects[0].deathFrame = 40;
  cfg.duration = 60;
  const auto frames = simulate(cfg);
  for (const auto& f : frames) {
    const bool present = std::any_of(f.groundTruth.begin(), f.groundTruth.end(),
                                     [](const GroundTruthObject& g) { return g.gtId == 1; });
    EXPECT_EQ(present, f.frameIdx >= 10 && f.frameIdx <= 40) << f.frameIdx;
  }
}

TEST(Simulate, PerfectDetectorReproducesGroundTruth) {
  auto cfg = defaultScenario(4);
  cfg.duration = 30;
  cfg.detector = {0, 0, 0, 0, 0};
  for (const auto& f : simulate(cfg)) {
    ASSERT_EQ(f.detections.size(), f.groundTruth.size());
    for (std::size_t i = 0; i < f.detections.size(); ++i) {
      EXPECT_EQ(f.detections[i].box, f.groundTruth[i].box);
      EXPECT_EQ(f.detections[i].classLabel, f.groundTruth[i].classLabel);
    }
  }
}

TEST(Simulate, WaypointsChangeVelocity) {
  auto cfg = singleCar(1.0);
  cfg.duration = 21;
  cfg.objects[0].velocity = {1, 0};
  cfg.objects[0].waypoints = {{10, {0, 2}}};
  const auto frames = simulate(cfg);
  const auto& b = frames[20].groundTruth[0].box;
  EXPECT_NEAR(b.cx, 21.0, 1e-9);
  EXPECT_NEAR(b.cy, 2.0, 1e-9);
  EXPECT_NEAR(b.yaw, std::numbers::pi / 2, 1e-12);
}

TEST(Simulate, InvalidConfigThrows) {
  auto cfg = singleCar(0.0);
  try {
    simulate(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  auto neg = defaultScenario();
  neg.clutterRate = -1;
  EXPECT_THROW(simulate(neg), Error);
}

TEST(Simulate, RoadsideClutterIsStaticAtEdges) {
  ScenarioConfig cfg = roadsidePreset(ScenarioConfig{});
  cfg.clutterRate = 0;
  cfg.duration = 5;
  ASSERT_FALSE(cfg.staticClutter.empty());
  for (const auto& f : simulate(cfg))
    for (const auto& p : f.points) {
      EXPECT_EQ(p.vr, 0.0);
      EXPECT_GT(std::abs(p.y), 15.0);
    }
}

std::vector<Vector2> ring(int n, double radius) {
  std::vector<Vector2> pts;
  for (int k = 0; k < n; ++k) {
    const double a = 2 * std::numbers::pi * (k + 0.5) / n;
    pts.emplace_back(20 + radius * std::cos(a), radius * std::sin(a));
  }
  return pts;
}

TEST(SkewPointDistribution, ZeroIsIdentity) {
  std::mt19937_64 rng(1);
  const auto pts = ring(16, 1.0);
  EXPECT_EQ(skewPointDistribution(pts, {20, 0}, {0, 0}, 0.0, rng), pts);
}

TEST(SkewPointDistribution, OneMovesAllToSensorSide) {
  std::mt19937_64 rng(2);
  const auto out = skewPointDistribution(ring(40, 1.3), {20, 0}, {0, 0}, 1.0, rng);
  for (const auto& p : out) EXPECT_LE(p.x(), 20.0 + 1e-12);
}

TEST(SkewPointDistribution, HalfFavoursSensorSide) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  int near = 0, total = 0;
  for (int t = 0; t < 2000; ++t) {
    std::vector<Vector2> pts;
    for (int k = 0; k < 10; ++k) pts.emplace_back(20 + nd(rng), nd(rng));
    for (const auto& p : skewPointDistribution(pts, {20, 0}, {0, 0}, 0.5, rng)) {
      near += p.x() <= 20.0;
      ++total;
    }
  }
  EXPECT_GT(static_cast<double>(near) / total, 0.7);
}

TEST(SkewPointDistribution, RejectsOutOfRange) {
  std::mt19937_64 rng(4);
  EXPECT_THROW(skewPointDistribution(ring(3, 1), {0, 0}, {1, 0}, 1.5, rng), Error);
}

}  // namespace
}  // namespace radmot
