#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "radmot/partitioning.hpp"

namespace radmot {
namespace {

std::vector<Vector2> twoGroups() {
  std::vector<Vector2> pts;
  for (int i = 0; i < 5; ++i) pts.emplace_back(0.1 * i, 0.0);
  for (int i = 0; i < 5; ++i) pts.emplace_back(10.0 + 0.1 * i, 0.0);
  return pts;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

TEST(GatePoints, InsideAndOutside) {
  const std::vector<Vector2> pts{{1.0, 0.0}, {3.0, 0.0}};
  const std::vector<GateRegion> regions{{Vector2::Zero(), 2.0}};
  const auto g = gatePoints(pts, regions);
  EXPECT_EQ(g.gated, (std::vector<std::size_t>{0}));
  EXPECT_EQ(g.ungated, (std::vector<std::size_t>{1}));
}

TEST(GatePoints, NoRegionsMeansAllUngated) {
  const auto pts = twoGroups();
  const auto g = gatePoints(pts, {});
  EXPECT_TRUE(g.gated.empty());
  EXPECT_EQ(g.ungated, iota(pts.size()));
}

TEST(GatePoints, ExactSplitOfRandomPoints) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::vector<Vector2> pts(300);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const std::vector<GateRegion> regions{{{0, 0}, 5.0}, {{3, 3}, 4.0}, {{-10, 8}, 2.0}};
  const auto g = gatePoints(pts, regions);
  std::vector<std::size_t> all = g.gated;
  all.insert(all.end(), g.ungated.begin(), g.ungated.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, iota(pts.size()));
  for (auto i : g.gated) {
    bool in = false;
    for (const auto& r : regions) in |= (pts[i] - r.position).norm() <= r.radius;
    EXPECT_TRUE(in);
  }
}

TEST(GatePoints, RejectsNonPositiveRadius) {
  const std::vector<Vector2> pts{{0, 0}};
  const std::vector<GateRegion> regions{{Vector2::Zero(), 0.0}};
  EXPECT_THROW(gatePoints(pts, regions), Error);
}

TEST(Dbscan, SeparatedGroups) {
  const auto pts = twoGroups();
  const auto r = dbscan(pts, 0.5, 3);
  ASSERT_EQ(r.clusters.size(), 2u);
  EXPECT_TRUE(r.noise.empty());
  EXPECT_EQ(r.clusters[0], (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(r.clusters[1], (std::vector<std::size_t>{5, 6, 7, 8, 9}));
}

TEST(Dbscan, IsolatedPointIsNoise) {
  const std::vector<Vector2> pts{{0, 0}};
  const auto r = dbscan(pts, 1.0, 2);
  EXPECT_TRUE(r.clusters.empty());
  EXPECT_EQ(r.noise, (std::vector<std::size_t>{0}));
}

TEST(Dbscan, ChainConnectivity) {
  std::vector<Vector2> pts;
  for (int i = 0; i < 12; ++i) pts.emplace_back(0.4 * i, 0.0);
  const auto r = dbscan(pts, 0.5, 1);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].size(), 12u);
}

TEST(Dbscan, BorderPointJoinsNearestCore) {
  // Two dense cores with a border point between them, closer to the right one.
  std::vector<Vector2> pts{{0, 0}, {0, 0.1}, {0, -0.1}, {2.0, 0}, {2.0, 0.1}, {2.0, -0.1}, {1.1, 0}};
  const auto r = dbscan(pts, 0.95, 3);
  ASSERT_EQ(r.clusters.size(), 2u);
  EXPECT_EQ(r.clusters[1], (std::vector<std::size_t>{3, 4, 5, 6}));
}

std::vector<std::vector<Vector2>> asPointSets(const std::vector<std::vector<std::size_t>>& cl,
                                              const std::vector<Vector2>& pts) {
  std::vector<std::vector<Vector2>> out;
  for (const auto& c : cl) {
    std::vector<Vector2> s;
    for (auto i : c) s.push_back(pts[i]);
    std::sort(s.begin(), s.end(), [](const Vector2& a, const Vector2& b) {
      return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        [](const Vector2& p, const Vector2& q) {
                                          return p.x() != q.x() ? p.x() < q.x() : p.y() < q.y();
                                        });
  });
  return out;
}

TEST(Dbscan, PermutationInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vector2> pts(40);
    for (auto& p : pts) p = {u(rng), u(rng)};
    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (int minPts : {1, 2, 3, 4}) {
      const auto a = dbscan(pts, 0.8, minPts);
      const auto b = dbscan(shuffled, 0.8, minPts);
      EXPECT_EQ(asPointSets(a.clusters, pts), asPointSets(b.clusters, shuffled));
      EXPECT_EQ(a.noise.size(), b.noise.size());
    }
  }
}

TEST(Kmeans, GroupAligned) {
  const auto pts = twoGroups();
  const auto c = kmeans(pts, 2, 1);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(c[1], (std::vector<std::size_t>{5, 6, 7, 8, 9}));
}

TEST(Kmeans, KEqualsNGivesSingletons) {
  const auto pts = twoGroups();
  const auto c = kmeans(pts, static_cast<int>(pts.size()), 3);
  ASSERT_EQ(c.size(), pts.size());
  for (const auto& cl : c) EXPECT_EQ(cl.size(), 1u);
}

TEST(Kmeans, DuplicatePointsStillNonEmpty) {
  const std::vector<Vector2> pts(6, Vector2(1.0, 1.0));
  const auto c = kmeans(pts, 3, 9);
  ASSERT_EQ(c.size(), 3u);
  for (const auto& cl : c) EXPECT_FALSE(cl.empty());
}

TEST(Kmeans, DeterministicGivenSeed) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Vector2> pts(50);
  for (auto& p : pts) p = {u(rng), u(rng)};
  EXPECT_EQ(kmeans(pts, 4, 123), kmeans(pts, 4, 123));
}

TEST(Kmeans, TooFewPoints) {
  const std::vector<Vector2> pts{{0, 0}};
  try {
    kmeans(pts, 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewPoints);
  }
}

TEST(MakeCluster, StatsMatchDirectComputation) {
  const std::vector<Vector2> pts{{0, 0}, {2, 0}, {1, 3}};
  const auto c = makeCluster(pts, {2, 0, 1});
  EXPECT_EQ(c.pointIndices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_NEAR(c.centroid.x(), 1.0, 1e-12);
  EXPECT_NEAR(c.centroid.y(), 1.0, 1e-12);
  // deviations: (-1,-1), (1,-1), (0,2)
  EXPECT_NEAR(c.scatter(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(c.scatter(1, 1), 6.0, 1e-12);
  EXPECT_NEAR(c.scatter(0, 1), 0.0, 1e-12);
}

TEST(GeneratePartitions, EmptyPointSet) {
  const auto parts = generatePartitions(std::vector<Vector2>{}, ClusteringConfig{});
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_TRUE(parts[0].clusters.empty());
}

TEST(GeneratePartitions, IdenticalSettingsDeduplicated) {
  const auto pts = twoGroups();
  ClusteringConfig cfg;
  cfg.settings = {{ClusteringMethod::dbscan, 0.5, 1}, {ClusteringMethod::dbscan, 1.0, 1}};
  const auto parts = generatePartitions(pts, cfg);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].clusters.size(), 2u);
}

TEST(GeneratePartitions, MixedSettingsCoverAllPoints) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  std::vector<Vector2> pts(10);
  for (auto& p : pts) p = {u(rng), u(rng)};
  ClusteringConfig cfg;
  cfg.settings = {{ClusteringMethod::dbscan, 0.3, 1},
                  {ClusteringMethod::dbscan, 1.0, 2},
                  {ClusteringMethod::dbscan, 3.0, 3},
                  {ClusteringMethod::kmeans, 1.0, 1, 2, 5},
                  {ClusteringMethod::kmeans, 1.0, 1, 3, 5}};
  const auto parts = generatePartitions(pts, cfg);
  EXPECT_GE(parts.size(), 1u);
  EXPECT_LE(parts.size(), 5u);
  for (const auto& p : parts) {
    std::vector<int> hits(pts.size(), 0);
    for (const auto& c : p.clusters) {
      ASSERT_GE(c.count(), 1u);
      for (auto i : c.pointIndices) ++hits[i];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_NO_THROW(validatePartition(p, iota(pts.size())));
  }
  for (std::size_t a = 0; a < parts.size(); ++a)
    for (std::size_t b = a + 1; b < parts.size(); ++b)
      EXPECT_NE(canonicalForm(parts[a]), canonicalForm(parts[b]));
}

TEST(GeneratePartitions, NoiseBecomesSingletons) {
  std::vector<Vector2> pts = twoGroups();
  pts.emplace_back(50.0, 50.0);
  ClusteringConfig cfg;
  cfg.settings = {{ClusteringMethod::dbscan, 0.5, 3}};
  const auto parts = generatePartitions(pts, cfg);
  ASSERT_EQ(parts.size(), 1u);
  ASSERT_EQ(parts[0].clusters.size(), 3u);
  EXPECT_EQ(parts[0].clusters[2].pointIndices, (std::vector<std::size_t>{10}));
}

TEST(GeneratePartitions, GroupsClusteredIndependently) {
  // Two adjacent points in different groups must never share a cluster.
  const std::vector<Vector2> pts{{0, 0}, {0.1, 0}, {0.2, 0}};
  const auto parts = generatePartitions(pts, {{0, 1}, {2}}, ClusteringConfig{});
  for (const auto& p : parts) {
    ASSERT_EQ(p.clusters.size(), 2u);
    EXPECT_NO_THROW(validatePartition(p, iota(3)));
  }
}

TEST(ValidatePartition, DetectsViolations) {
  const std::vector<Vector2> pts{{0, 0}, {1, 0}};
  Partition overlap{{makeCluster(pts, {0, 1}), makeCluster(pts, {1})}};
  EXPECT_THROW(validatePartition(overlap, iota(2)), Error);
  Partition missing{{makeCluster(pts, {0})}};
  EXPECT_THROW(validatePartition(missing, iota(2)), Error);
}

TEST(RadialSpeedFilter, EgoCompensation) {
  // Static world point ahead of an ego moving +x at 10 m/s measures vr = -10.
  std::vector<RadarPoint> pts(2);
  pts[0].x = 20.0;
  pts[0].vr = -10.0;
  pts[1].x = 20.0;
  pts[1].y = 1.0;
  pts[1].vr = 3.0;
  EgoInfo ego;
  ego.vx = 10.0;
  EXPECT_EQ(filterLowRadialSpeed(pts, 0.5, std::nullopt), (std::vector<std::size_t>{0, 1}));
  const auto kept = filterLowRadialSpeed(pts, 0.5, ego);
  EXPECT_EQ(kept, (std::vector<std::size_t>{1}));
}

}  // namespace
}  // namespace radmot
