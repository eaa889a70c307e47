#pragma once

// Gating and clustering of radar points into competing measurement
// partitions. All geometry is BEV; indices always refer to the caller's
// point list.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "radmot/core.hpp"
#include "radmot/kinematics.hpp"

namespace radmot {

struct Cluster {
  std::vector<std::size_t> pointIndices;  ///< sorted ascending
  Vector2 centroid = Vector2::Zero();
  Matrix2 scatter = Matrix2::Zero();  ///< sum of (z - mean)(z - mean)^T

  [[nodiscard]] std::size_t count() const { return pointIndices.size(); }
};

struct Partition {
  std::vector<Cluster> clusters;  ///< ordered by first point index
};

enum class ClusteringMethod { dbscan, kmeans };

struct ClusteringSetting {
  ClusteringMethod method = ClusteringMethod::dbscan;
  double eps = 1.0;
  int minPts = 1;
  int k = 1;
  std::uint64_t seed = 0;
};

struct ClusteringConfig {
  std::vector<ClusteringSetting> settings = defaultSettings();

  static std::vector<ClusteringSetting> defaultSettings() {
    std::vector<ClusteringSetting> s;
    for (double eps : {0.5, 1.0, 2.0})
      for (int minPts : {1, 2}) s.push_back({ClusteringMethod::dbscan, eps, minPts, 1, 0});
    return s;
  }

  void validate() const {
    if (settings.empty()) throw Error(ErrorCode::InvalidConfig, "clustering.settings must not be empty");
    for (const auto& s : settings) {
      if (s.method == ClusteringMethod::dbscan && !(s.eps > 0.0 && s.minPts >= 1))
        throw Error(ErrorCode::InvalidConfig, "dbscan requires eps > 0 and minPts >= 1");
      if (s.method == ClusteringMethod::kmeans && s.k < 1)
        throw Error(ErrorCode::InvalidConfig, "kmeans requires k >= 1");
    }
  }
};

inline Cluster makeCluster(std::span<const Vector2> points, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  Cluster c;
  c.pointIndices = std::move(indices);
  for (auto i : c.pointIndices) c.centroid += points[i];
  c.centroid /= static_cast<double>(c.pointIndices.size());
  for (auto i : c.pointIndices) {
    const Vector2 d = points[i] - c.centroid;
    c.scatter += d * d.transpose();
  }
  return c;
}

struct GateRegion {
  Vector2 position;
  double radius = 1.0;
};

struct GateResult {
  std::vector<std::size_t> gated;
  std::vector<std::size_t> ungated;
};

/// A point is gated iff it lies within the radius of at least one region.
inline GateResult gatePoints(std::span<const Vector2> points, std::span<const GateRegion> regions) {
  for (const auto& r : regions)
    if (!(r.radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "gate radius must be positive");
  GateResult out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool inside = std::any_of(regions.begin(), regions.end(), [&](const GateRegion& r) {
      return (points[i] - r.position).squaredNorm() <= r.radius * r.radius;
    });
    (inside ? out.gated : out.ungated).push_back(i);
  }
  return out;
}

/// Indices of points whose ego-compensated |vr| is at least `minSpeed`.
/// Points are in the world frame; with ego info the sensor velocity along the
/// line of sight is added back before thresholding.
inline std::vector<std::size_t> filterLowRadialSpeed(std::span<const RadarPoint> points, double minSpeed,
                                                     const std::optional<EgoInfo>& ego) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double vr = points[i].vr;
    if (ego) {
      const Vector2 los(points[i].x - ego->x, points[i].y - ego->y);
      const double r = los.norm();
      if (r > 0.0) vr += Vector2(ego->vx, ego->vy).dot(los / r);
    }
    if (std::abs(vr) >= minSpeed) keep.push_back(i);
  }
  return keep;
}

struct DbscanResult {
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> noise;
};

/// Density-based clustering over `subset` of `points`. Core points form
/// connected components; a border point joins the component of its nearest
/// core point (ties: lexicographically smallest core coordinates), which makes
/// the result independent of input order.
inline DbscanResult dbscan(std::span<const Vector2> points, std::span<const std::size_t> subset,
                           double eps, int minPts) {
  if (!(eps > 0.0) || minPts < 1)
    throw Error(ErrorCode::InvalidArgument, "dbscan requires eps > 0 and minPts >= 1");
  const std::size_t n = subset.size();
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if ((points[subset[a]] - points[subset[b]]).squaredNorm() <= eps2) {
        nbrs[a].push_back(b);
        nbrs[b].push_back(a);
      }
  std::vector<char> core(n);
  for (std::size_t a = 0; a < n; ++a) core[a] = static_cast<int>(nbrs[a].size()) + 1 >= minPts;

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(n, kNone);
  std::size_t numClusters = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (!core[a] || label[a] != kNone) continue;
    std::vector<std::size_t> stack{a};
    label[a] = numClusters;
    while (!stack.empty()) {
      const auto cur = stack.back();
      stack.pop_back();
      for (auto b : nbrs[cur])
        if (core[b] && label[b] == kNone) {
          label[b] = numClusters;
          stack.push_back(b);
        }
    }
    ++numClusters;
  }
  const auto lexLess = [&](std::size_t a, std::size_t b) {
    const Vector2& pa = points[subset[a]];
    const Vector2& pb = points[subset[b]];
    return pa.x() != pb.x() ? pa.x() < pb.x() : pa.y() < pb.y();
  };
  for (std::size_t a = 0; a < n; ++a) {
    if (core[a]) continue;
    std::size_t best = kNone;
    double bestD = std::numeric_limits<double>::infinity();
    for (auto b : nbrs[a]) {
      if (!core[b]) continue;
      const double d = (points[subset[a]] - points[subset[b]]).squaredNorm();
      if (d < bestD || (d == bestD && lexLess(b, best))) {
        bestD = d;
        best = b;
      }
    }
    if (best != kNone) label[a] = label[best];
  }

  DbscanResult out;
  out.clusters.resize(numClusters);
  for (std::size_t a = 0; a < n; ++a) {
    if (label[a] == kNone)
      out.noise.push_back(subset[a]);
    else
      out.clusters[label[a]].push_back(subset[a]);
  }
  for (auto& c : out.clusters) std::sort(c.begin(), c.end());
  std::sort(out.clusters.begin(), out.clusters.end());
  std::sort(out.noise.begin(), out.noise.end());
  return out;
}

inline DbscanResult dbscan(std::span<const Vector2> points, double eps, int minPts) {
  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return dbscan(points, all, eps, minPts);
}

/// Lloyd's k-means with k-means++ seeding. Always returns k non-empty clusters.
inline std::vector<std::vector<std::size_t>> kmeans(std::span<const Vector2> points,
                                                    std::span<const std::size_t> subset, int k,
                                                    std::uint64_t seed, int maxIterations = 100) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "kmeans requires k >= 1");
  const std::size_t n = subset.size();
  if (static_cast<std::size_t>(k) > n)
    throw Error(ErrorCode::TooFewPoints, "kmeans: k exceeds the number of points");
  const auto pt = [&](std::size_t a) -> const Vector2& { return points[subset[a]]; };

  std::mt19937_64 rng(seed);
  std::vector<Vector2> centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(pt(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)));
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      d2[a] = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) d2[a] = std::min(d2[a], (pt(a) - c).squaredNorm());
      total += d2[a];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n && u >= d2[pick]; ++pick) u -= d2[pick];
    }
    centers.push_back(pt(pick));
  }

  std::vector<int> assign(n, -1);
  for (int it = 0; it < maxIterations; ++it) {
    bool changed = false;
    for (std::size_t a = 0; a < n; ++a) {
      int best = 0;
      double bestD = (pt(a) - centers[0]).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (pt(a) - centers[c]).squaredNorm();
        if (d < bestD) {
          bestD = d;
          best = c;
        }
      }
      if (assign[a] != best) {
        assign[a] = best;
        changed = true;
      }
    }
    // Refill empty clusters with the point farthest from its center.
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int c : assign) ++sizes[c];
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      double farD = -1.0;
      for (std::size_t a = 0; a < n; ++a) {
        if (sizes[assign[a]] < 2) continue;
        const double d = (pt(a) - centers[assign[a]]).squaredNorm();
        if (d > farD) {
          farD = d;
          far = a;
        }
      }
      --sizes[assign[far]];
      assign[far] = c;
      sizes[c] = 1;
      changed = true;
    }
    for (int c = 0; c < k; ++c) {
      Vector2 s = Vector2::Zero();
      for (std::size_t a = 0; a < n; ++a)
        if (assign[a] == c) s += pt(a);
      centers[c] = s / sizes[c];
    }
    if (!changed) break;
  }

  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
  for (std::size_t a = 0; a < n; ++a) out[assign[a]].push_back(subset[a]);
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::vector<std::size_t>> kmeans(std::span<const Vector2> points, int k,
                                                    std::uint64_t seed) {
  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return kmeans(points, all, k, seed);
}

/// Sorted cluster index sets; two partitions are identical iff these match.
inline std::vector<std::vector<std::size_t>> canonicalForm(const Partition& p) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(p.clusters.size());
  for (const auto& c : p.clusters) out.push_back(c.pointIndices);
  std::sort(out.begin(), out.end());
  return out;
}

/// Throws InvalidPartition unless clusters are non-empty, pairwise disjoint and
/// together cover exactly `subset`.
inline void validatePartition(const Partition& p, std::span<const std::size_t> subset) {
  std::vector<std::size_t> all;
  for (const auto& c : p.clusters) {
    if (c.pointIndices.empty()) throw Error(ErrorCode::InvalidPartition, "empty cluster");
    all.insert(all.end(), c.pointIndices.begin(), c.pointIndices.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(subset.begin(), subset.end());
  std::sort(expect.begin(), expect.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw Error(ErrorCode::InvalidPartition, "clusters overlap");
  if (all != expect) throw Error(ErrorCode::InvalidPartition, "clusters do not cover the point set");
}

inline std::vector<std::vector<std::size_t>> clusterWith(std::span<const Vector2> points,
                                                         std::span<const std::size_t> subset,
                                                         const ClusteringSetting& s) {
  if (subset.empty()) return {};
  if (s.method == ClusteringMethod::kmeans) {
    const int k = std::min<int>(s.k, static_cast<int>(subset.size()));
    return kmeans(points, subset, k, s.seed);
  }
  auto r = dbscan(points, subset, s.eps, s.minPts);
  // Noise stays in the partition as singletons; the filter decides whether it is clutter.
  for (auto i : r.noise) r.clusters.push_back({i});
  std::sort(r.clusters.begin(), r.clusters.end());
  return r.clusters;
}

/// One partition per clustering setting, each covering `subset`, with
/// duplicates removed (first occurrence wins, order follows the settings).
/// `groups` lets the caller cluster disjoint point groups independently (for
/// instance gated and ungated points); each partition is the union of the
/// per-group clusterings for the same setting.
inline std::vector<Partition> generatePartitions(
    std::span<const Vector2> points, const std::vector<std::vector<std::size_t>>& groups,
    const ClusteringConfig& cfg) {
  std::vector<Partition> out;
  std::set<std::vector<std::vector<std::size_t>>> seen;
  for (const auto& setting : cfg.settings) {
    Partition p;
    for (const auto& g : groups)
      for (auto& idx : clusterWith(points, g, setting)) p.clusters.push_back(makeCluster(points, std::move(idx)));
    std::sort(p.clusters.begin(), p.clusters.end(), [](const Cluster& a, const Cluster& b) {
      return a.pointIndices.front() < b.pointIndices.front();
    });
    if (seen.insert(canonicalForm(p)).second) out.push_back(std::move(p));
  }
  if (out.empty()) out.emplace_back();
  return out;
}

inline std::vector<Partition> generatePartitions(std::span<const Vector2> points,
                                                 const ClusteringConfig& cfg) {
  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return generatePartitions(points, std::vector<std::vector<std::size_t>>{all}, cfg);
}

}  // namespace radmot
