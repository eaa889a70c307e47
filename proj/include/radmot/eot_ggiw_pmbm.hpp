#pragma once

// Extended-object PMBM filter with gamma Gaussian inverse-Wishart (GGIW)
// single-object densities. Measurements arrive as competing partitions of the
// frame's points; each (global hypothesis, partition) pair is expanded with
// k-best assignment.
//
// Conventions (2D): the IW mean is V / (v - 6); cluster likelihoods are set
// densities, so no n! terms appear anywhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "radmot/assignment.hpp"
#include "radmot/core.hpp"
#include "radmot/geometry.hpp"
#include "radmot/kinematics.hpp"
#include "radmot/partitioning.hpp"

namespace radmot {

struct GammaRate {
  double a = 10.0;
  double b = 1.0;
  [[nodiscard]] double mean() const { return a / b; }
  [[nodiscard]] bool valid() const { return std::isfinite(a) && std::isfinite(b) && a > 0 && b > 0; }
};

struct InverseWishartExtent {
  double v = 10.0;
  Matrix2 V = 4.0 * Matrix2::Identity();
  [[nodiscard]] Matrix2 expected() const { return V / (v - 6.0); }
  [[nodiscard]] bool valid() const {
    if (!(v > 6.0) || !V.allFinite()) return false;
    return V(0, 0) > 0 && V.determinant() > 0 && std::abs(V(0, 1) - V(1, 0)) < 1e-9 * V.norm();
  }
};

struct GgiwComponent {
  GammaRate rate;
  KinematicGaussian kinematics;
  InverseWishartExtent extent;
  TrackId trackId = 0;
};

struct BernoulliEOT {
  double existence = 0.0;
  GgiwComponent ggiw;
};

/// One branch of a track. `parent` indexes the prior track's hypotheses
/// (-1 for newborn) and `clusterSize` is the matched cell size (0 on a miss).
struct EotLocalHypothesis {
  BernoulliEOT bernoulli;
  int parent = -1;
  std::size_t clusterSize = 0;
};

struct EotTrack {
  TrackId trackId = 0;
  std::optional<ObjectClass> classLabel;  ///< set in detector-driven mode
  std::vector<EotLocalHypothesis> hypotheses;
};

/// selectors[i] picks a local hypothesis of track i, or -1 when absent.
struct GlobalHypothesis {
  double weight = 1.0;
  std::vector<int> selectors;
};

inline constexpr std::size_t kEotSlots = kNumClasses + 1;  // per class, then class-agnostic

inline std::size_t eotSlot(std::optional<ObjectClass> c) { return c ? classIndex(*c) : kNumClasses; }

struct PmbmDensity {
  std::array<double, kEotSlots> undetectedDensity{};  ///< uniform PPP intensity per slot (1/m^2)
  std::vector<EotTrack> tracks;
  std::vector<GlobalHypothesis> hypotheses{GlobalHypothesis{}};
  TrackId nextTrackId = 1;
};

struct EotClassParams {
  double detectionProbMeasurable = 0.9;  ///< Pdm
  double clutterIntensity = 6.7e-3;      ///< per m^2 per scan
  double birthDensity = 3e-6;            ///< per m^2 per scan
  GammaRate birthRate{8.0, 1.0};
  double birthDof = 10.0;
  Matrix2 birthExtent = Matrix2::Identity();  ///< expected extent of a newborn
  double birthVelocityStd = 5.0;
  double boxCenterZ = 0.0;
  double boxHeight = 1.5;
};

/// Width/length intervals are half-open (min, max].
struct SizeRule {
  ObjectClass classLabel = ObjectClass::other;
  double widthMin = 0.0, widthMax = 0.0;
  double lengthMin = 0.0, lengthMax = 0.0;
};

inline std::vector<SizeRule> defaultSizeTable() {
  return {{ObjectClass::pedestrian, 0.0, 1.0, 0.0, 1.2},
          {ObjectClass::cyclist, 0.0, 1.2, 1.2, 2.4},
          {ObjectClass::car, 1.4, 2.6, 2.4, 6.0}};
}

struct EotConfig {
  double survivalProb = 0.99;
  double processNoise = 2.0;
  double forgetting = 1.25;  ///< eta
  double extentTau = 5.0;    ///< seconds
  double gateRadius = 4.0;   ///< centroid to predicted position (m)
  int maxHypotheses = 10;
  double hypothesisPruneThreshold = 1e-4;
  double existenceExtractThreshold = 0.5;
  double existencePruneThreshold = 1e-3;
  double nmsIouThreshold = 0.1;
  double axisScale = 2.0;
  std::vector<SizeRule> sizeTable = defaultSizeTable();
  EotClassParams generic;
  std::array<EotClassParams, kNumClasses> classes{};

  [[nodiscard]] const EotClassParams& params(std::optional<ObjectClass> c) const {
    return c ? classes[classIndex(*c)] : generic;
  }

  void validate() const {
    const auto bad = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (!(survivalProb >= 0 && survivalProb <= 1)) bad("eot.survivalProb must lie in [0,1]");
    if (!(processNoise >= 0)) bad("eot.processNoise must be >= 0");
    if (!(forgetting >= 1)) bad("eot.forgetting must be >= 1");
    if (!(extentTau > 0)) bad("eot.extentTau must be > 0");
    if (!(gateRadius > 0)) bad("eot.gateRadius must be > 0");
    if (maxHypotheses < 1) bad("eot.maxHypotheses must be >= 1");
    if (!(hypothesisPruneThreshold >= 0 && hypothesisPruneThreshold < 1)) bad("eot.hypothesisPruneThreshold must lie in [0,1)");
    if (!(existencePruneThreshold >= 0 && existencePruneThreshold <= existenceExtractThreshold &&
          existenceExtractThreshold <= 1))
      bad("eot: need 0 <= existencePruneThreshold <= existenceExtractThreshold <= 1");
    if (!(nmsIouThreshold > 0 && nmsIouThreshold < 1)) bad("eot.nmsIouThreshold must lie in (0,1)");
    if (!(axisScale > 0)) bad("eot.axisScale must be > 0");
    const auto checkClass = [&](const EotClassParams& p) {
      if (!(p.detectionProbMeasurable >= 0 && p.detectionProbMeasurable <= 1)) bad("detectionProbMeasurable must lie in [0,1]");
      if (!(p.clutterIntensity > 0)) bad("clutterIntensity must be > 0");
      if (!(p.birthDensity >= 0)) bad("birthDensity must be >= 0");
      if (!p.birthRate.valid()) bad("birthRate needs a > 0, b > 0");
      if (!(p.birthDof > 6)) bad("birthDof must be > 6");
      if (!(p.birthExtent.determinant() > 0 && p.birthExtent(0, 0) > 0)) bad("birthExtent must be SPD");
      if (!(p.birthVelocityStd > 0)) bad("birthVelocityStd must be > 0");
    };
    checkClass(generic);
    for (const auto& p : classes) checkClass(p);
  }
};

/// Probability that a Poisson count with Gamma(a, b) rate is at least one.
inline double measurableProb(const GammaRate& g) { return -std::expm1(-g.a * std::log1p(1.0 / g.b)); }

/// P_d = Pdm * P_m.
inline double eotPredictedDetectionProb(const GgiwComponent& c, const EotClassParams& p) {
  return std::clamp(p.detectionProbMeasurable * measurableProb(c.rate), 0.0, 1.0);
}

inline double eotPredictedDetectionProb(const GgiwComponent& c, const EotConfig& cfg,
                                        std::optional<ObjectClass> cls = std::nullopt) {
  return eotPredictedDetectionProb(c, cfg.params(cls));
}

inline GgiwComponent ggiwPredict(GgiwComponent c, double dt, const EotConfig& cfg) {
  c.rate.a /= cfg.forgetting;
  c.rate.b /= cfg.forgetting;
  c.kinematics = predictConstantVelocity(c.kinematics, dt, cfg.processNoise);
  const double decay = std::exp(-dt / cfg.extentTau);
  c.extent.v = 6.0 + decay * (c.extent.v - 6.0);
  c.extent.V *= decay;
  return c;
}

inline PmbmDensity eotPredict(PmbmDensity density, double dt, const EotConfig& cfg) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "eotPredict requires dt > 0");
  for (auto& t : density.tracks)
    for (auto& h : t.hypotheses) {
      h.bernoulli.ggiw = ggiwPredict(h.bernoulli.ggiw, dt, cfg);
      h.bernoulli.existence *= cfg.survivalProb;
      h.parent = -1;
      h.clusterSize = 0;
    }
  for (std::size_t s = 0; s < kEotSlots; ++s) {
    const auto& p = s < kNumClasses ? cfg.classes[s] : cfg.generic;
    density.undetectedDensity[s] = cfg.survivalProb * density.undetectedDensity[s] + p.birthDensity;
  }
  return density;
}

namespace detail {

inline constexpr double kMinLogWeight = -1e4;

inline double logMultiGamma2(double x) {
  return 0.5 * std::log(std::numbers::pi) + std::lgamma(x) + std::lgamma(x - 0.5);
}

/// log of the gamma-Poisson set-count factor for n points.
inline double logCountFactor(const GammaRate& g, double n) {
  return std::lgamma(g.a + n) - std::lgamma(g.a) + g.a * std::log(g.b) - (g.a + n) * std::log(g.b + 1.0);
}

inline double logAddExp(double x, double y) {
  if (x == -std::numeric_limits<double>::infinity()) return y;
  if (y == -std::numeric_limits<double>::infinity()) return x;
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

struct GgiwUpdate {
  double logLikelihood = 0.0;  ///< log p(W | component), including the count factor
  GgiwComponent posterior;
};

inline GgiwUpdate ggiwUpdate(const GgiwComponent& prior, const Cluster& cell) {
  const double n = static_cast<double>(cell.count());
  const Matrix24 H = positionSelector();
  const Matrix2 Xhat = prior.extent.expected();
  const Matrix2 S = symmetrize(Matrix2(H * prior.kinematics.covariance * H.transpose() + Xhat / n));
  const Eigen::LLT<Matrix2> sLlt(S);
  const Eigen::Matrix<double, 4, 2> K = sLlt.solve(H * prior.kinematics.covariance).transpose();
  const Vector2 eps = cell.centroid - H * prior.kinematics.mean;

  const Eigen::SelfAdjointEigenSolver<Matrix2> xEig(Xhat);
  const Eigen::SelfAdjointEigenSolver<Matrix2> sEig(S);
  const Matrix2 A = xEig.operatorSqrt() * sEig.operatorInverseSqrt();
  const Matrix2 N = A * eps * eps.transpose() * A.transpose();

  GgiwUpdate u;
  GgiwComponent& post = u.posterior;
  post = prior;
  post.kinematics.mean += K * eps;
  post.kinematics.covariance = symmetrize(Matrix4(prior.kinematics.covariance - K * S * K.transpose()));
  post.extent.v = prior.extent.v + n;
  post.extent.V = symmetrize(Matrix2(prior.extent.V + N + cell.scatter));
  post.rate.a = prior.rate.a + n;
  post.rate.b = prior.rate.b + 1.0;

  const double v0 = prior.extent.v, v1 = post.extent.v;
  u.logLikelihood = -n * std::log(std::numbers::pi) - std::log(n) + 0.5 * std::log(Xhat.determinant()) -
                    0.5 * std::log(S.determinant()) + 0.5 * (v0 - 3.0) * std::log(prior.extent.V.determinant()) -
                    0.5 * (v1 - 3.0) * std::log(post.extent.V.determinant()) + logMultiGamma2(0.5 * (v1 - 3.0)) -
                    logMultiGamma2(0.5 * (v0 - 3.0)) + logCountFactor(prior.rate, n);
  return u;
}

struct GgiwBirth {
  double logIntensity = 0.0;  ///< log of the PPP-weighted detection likelihood of the cell
  GgiwComponent component;
};

/// Newborn from a cell under a spatially uniform undetected intensity.
inline GgiwBirth ggiwBirth(const Cluster& cell, const EotClassParams& p, double density) {
  const double n = static_cast<double>(cell.count());
  const double v0 = p.birthDof;
  const Matrix2 V0 = (v0 - 6.0) * p.birthExtent;
  const double v1 = v0 + n - 1.0;
  const Matrix2 V1 = symmetrize(Matrix2(V0 + cell.scatter));

  GgiwBirth b;
  const double logSpatial = -(n - 1.0) * std::log(std::numbers::pi) - std::log(n) +
                            0.5 * (v0 - 3.0) * std::log(V0.determinant()) -
                            0.5 * (v1 - 3.0) * std::log(V1.determinant()) +
                            logMultiGamma2(0.5 * (v1 - 3.0)) - logMultiGamma2(0.5 * (v0 - 3.0));
  b.logIntensity = (density > 0 && p.detectionProbMeasurable > 0)
                       ? std::log(density) + std::log(p.detectionProbMeasurable) +
                             logCountFactor(p.birthRate, n) + logSpatial
                       : -std::numeric_limits<double>::infinity();

  auto& c = b.component;
  c.rate = {p.birthRate.a + n, p.birthRate.b + 1.0};
  c.extent = {v1, V1};
  c.kinematics.mean << cell.centroid, 0.0, 0.0;
  c.kinematics.covariance.setZero();
  c.kinematics.covariance.topLeftCorner<2, 2>() = c.extent.expected() / n;
  c.kinematics.covariance.bottomRightCorner<2, 2>() =
      p.birthVelocityStd * p.birthVelocityStd * Matrix2::Identity();
  return b;
}

inline bool classCompatible(std::optional<ObjectClass> a, std::optional<ObjectClass> b) {
  return !a || !b || *a == *b;
}

}  // namespace detail

/// Box whose edges sit at axisScale standard deviations of the expected extent.
inline Box3D extentToBox(const GgiwComponent& c, const EotConfig& cfg,
                         const EotClassParams& boxDefaults) {
  if (!(c.extent.v > 6.0)) throw Error(ErrorCode::DegenerateExtent, "extent dof must exceed 6");
  const Matrix2 X = c.extent.expected();
  const double p = X(0, 0), r = X(1, 1), q = 0.5 * (X(0, 1) + X(1, 0));
  const double mid = 0.5 * (p + r);
  const double rad = std::hypot(0.5 * (p - r), q);
  const double l1 = mid + rad, l2 = mid - rad;
  if (!std::isfinite(l1) || !(l2 > 0.0)) throw Error(ErrorCode::DegenerateExtent, "expected extent is not SPD");
  double yaw = 0.5 * std::atan2(2.0 * q, p - r);
  if (yaw >= std::numbers::pi / 2) yaw -= std::numbers::pi;

  Box3D box;
  box.cx = c.kinematics.mean(0);
  box.cy = c.kinematics.mean(1);
  box.cz = boxDefaults.boxCenterZ;
  box.length = 2.0 * cfg.axisScale * std::sqrt(l1);
  box.width = 2.0 * cfg.axisScale * std::sqrt(l2);
  box.height = boxDefaults.boxHeight;
  box.yaw = yaw;
  return box;
}

inline Box3D extentToBox(const GgiwComponent& c, const EotConfig& cfg) {
  return extentToBox(c, cfg, cfg.generic);
}

/// Greedy suppression in order of descending existence (stable for ties).
inline std::vector<TrackRecord> nmsBoxes(std::vector<TrackRecord> records, double iouThreshold) {
  if (!(iouThreshold > 0 && iouThreshold < 1))
    throw Error(ErrorCode::InvalidArgument, "iouThreshold must lie in (0,1)");
  std::stable_sort(records.begin(), records.end(),
                   [](const TrackRecord& a, const TrackRecord& b) { return a.existence > b.existence; });
  std::vector<TrackRecord> kept;
  for (auto& r : records) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const TrackRecord& k) {
      return bevIoU(k.box, r.box) >= iouThreshold;
    });
    if (!suppressed) kept.push_back(std::move(r));
  }
  return kept;
}

inline ObjectClass heuristicClassify(const Box3D& box, std::span<const SizeRule> table) {
  for (const auto& rule : table)
    if (box.width > rule.widthMin && box.width <= rule.widthMax && box.length > rule.lengthMin &&
        box.length <= rule.lengthMax)
      return rule.classLabel;
  return ObjectClass::other;
}

/// Throws InvalidPartition unless every partition is a disjoint cover of the
/// same point set (the one covered by the first partition).
inline void validatePartitions(std::span<const Partition> partitions) {
  if (partitions.empty()) return;
  std::vector<std::size_t> ref;
  for (const auto& c : partitions.front().clusters) ref.insert(ref.end(), c.pointIndices.begin(), c.pointIndices.end());
  std::sort(ref.begin(), ref.end());
  for (const auto& p : partitions) validatePartition(p, ref);
}

/// Measurement update over competing partitions. `pointClass`, when
/// non-empty, gives each point's detector class and restricts associations to
/// matching classes.
inline PmbmDensity eotUpdateWithPartitions(const PmbmDensity& prior, std::span<const Partition> partitionsIn,
                                           const EotConfig& cfg, std::span<const ObjectClass> pointClass = {}) {
  static const std::vector<Partition> kNoMeasurements{Partition{}};
  const std::span<const Partition> partitions = partitionsIn.empty() ? std::span<const Partition>(kNoMeasurements)
                                                                     : partitionsIn;
  validatePartitions(partitions);

  // Cells shared across partitions are evaluated once.
  struct Cell {
    const Cluster* cluster = nullptr;
    std::optional<ObjectClass> cls;
    double newLog = 0.0;  ///< log(newborn intensity + clutter)
    BernoulliEOT birth;
  };
  std::vector<Cell> cells;
  std::vector<std::vector<int>> partCells(partitions.size());
  {
    std::map<std::vector<std::size_t>, int> ids;
    for (std::size_t p = 0; p < partitions.size(); ++p)
      for (const auto& cl : partitions[p].clusters) {
        auto [it, inserted] = ids.emplace(cl.pointIndices, static_cast<int>(cells.size()));
        if (inserted) {
          Cell cell;
          cell.cluster = &cl;
          if (!pointClass.empty()) {
            if (cl.pointIndices.back() >= pointClass.size())
              throw Error(ErrorCode::InvalidArgument, "pointClass is shorter than the point set");
            cell.cls = pointClass[cl.pointIndices.front()];
          }
          const auto& par = cfg.params(cell.cls);
          const auto b = detail::ggiwBirth(cl, par, prior.undetectedDensity[eotSlot(cell.cls)]);
          // Alternative: every point of the cell is clutter.
          const double logClutter = static_cast<double>(cl.count()) * std::log(par.clutterIntensity);
          cell.newLog = std::max(detail::logAddExp(b.logIntensity, logClutter), detail::kMinLogWeight);
          cell.birth.existence = std::exp(b.logIntensity - cell.newLog);
          cell.birth.ggiw = b.component;
          cells.push_back(std::move(cell));
        }
        partCells[p].push_back(it->second);
      }
  }
  const int numCells = static_cast<int>(cells.size());

  // Per local hypothesis: miss branch and gated hit branches.
  struct Branches {
    double missLog = 0.0;
    BernoulliEOT missed;
    std::vector<int> hitIndex;  ///< per cell, index into hits or -1
    std::vector<std::pair<double, BernoulliEOT>> hits;  ///< (log weight, posterior)
  };
  const std::size_t numTracks = prior.tracks.size();
  std::vector<std::vector<Branches>> branches(numTracks);
  for (std::size_t i = 0; i < numTracks; ++i) {
    const auto& track = prior.tracks[i];
    const auto& par = cfg.params(track.classLabel);
    for (const auto& lh : track.hypotheses) {
      Branches br;
      const double r = lh.bernoulli.existence;
      const double pd = eotPredictedDetectionProb(lh.bernoulli.ggiw, par);
      const double missMass = std::max(1.0 - r * pd, 1e-300);
      br.missLog = std::log(missMass);
      br.missed = lh.bernoulli;
      br.missed.existence = std::clamp(r * (1.0 - pd) / missMass, 0.0, 1.0);
      br.hitIndex.assign(static_cast<std::size_t>(numCells), -1);
      if (r > 0.0 && par.detectionProbMeasurable > 0.0) {
        const Vector2 pos = lh.bernoulli.ggiw.kinematics.position();
        for (int c = 0; c < numCells; ++c) {
          const auto& cell = cells[static_cast<std::size_t>(c)];
          if (!detail::classCompatible(track.classLabel, cell.cls)) continue;
          if ((cell.cluster->centroid - pos).norm() > cfg.gateRadius) continue;
          const auto up = detail::ggiwUpdate(lh.bernoulli.ggiw, *cell.cluster);
          const double logW = std::log(r) + std::log(par.detectionProbMeasurable) + up.logLikelihood;
          if (!std::isfinite(logW)) continue;
          br.hitIndex[static_cast<std::size_t>(c)] = static_cast<int>(br.hits.size());
          br.hits.push_back({logW, BernoulliEOT{1.0, up.posterior}});
        }
      }
      branches[i].push_back(std::move(br));
    }
  }

  // Expand every (global hypothesis, partition) pair with k-best assignment.
  constexpr int kAbsent = -2, kMiss = -1;
  struct Candidate {
    double logWeight = 0.0;
    std::size_t priorHyp = 0;
    std::vector<int> outcome;  ///< per prior track: kAbsent, kMiss or cell id
    std::vector<int> newCells;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < prior.hypotheses.size(); ++g) {
    const auto& gh = prior.hypotheses[g];
    if (gh.selectors.size() != numTracks)
      throw Error(ErrorCode::InvalidArgument, "global hypothesis does not match the track list");
    if (!(gh.weight > 0.0)) continue;
    const int k = std::max(1, static_cast<int>(std::ceil(cfg.maxHypotheses * gh.weight - 1e-9)));
    std::vector<std::size_t> present;
    double base = std::log(gh.weight);
    for (std::size_t i = 0; i < numTracks; ++i)
      if (gh.selectors[i] >= 0) {
        present.push_back(i);
        base += branches[i][static_cast<std::size_t>(gh.selectors[i])].missLog;
      }
    const auto branchOf = [&](std::size_t i) -> const Branches& {
      return branches[i][static_cast<std::size_t>(gh.selectors[i])];
    };

    for (std::size_t p = 0; p < partitions.size(); ++p) {
      std::vector<int> rows, fixedNew;
      double fixed = base;
      for (int c : partCells[p]) {
        const bool gated = std::any_of(present.begin(), present.end(), [&](std::size_t i) {
          return branchOf(i).hitIndex[static_cast<std::size_t>(c)] >= 0;
        });
        if (gated) {
          rows.push_back(c);
        } else {
          fixedNew.push_back(c);
          fixed += cells[static_cast<std::size_t>(c)].newLog;
        }
      }
      std::vector<std::size_t> cols;
      for (auto i : present)
        if (std::any_of(rows.begin(), rows.end(),
                        [&](int c) { return branchOf(i).hitIndex[static_cast<std::size_t>(c)] >= 0; }))
          cols.push_back(i);

      const auto R = static_cast<Eigen::Index>(rows.size());
      const auto C = static_cast<Eigen::Index>(cols.size());
      CostMatrix cost = CostMatrix::Constant(R, C + R, kForbidden);
      for (Eigen::Index j = 0; j < R; ++j) {
        const auto c = static_cast<std::size_t>(rows[static_cast<std::size_t>(j)]);
        for (Eigen::Index t = 0; t < C; ++t) {
          const auto& br = branchOf(cols[static_cast<std::size_t>(t)]);
          const int h = br.hitIndex[c];
          if (h >= 0) cost(j, t) = -(br.hits[static_cast<std::size_t>(h)].first - br.missLog);
        }
        cost(j, C + j) = -cells[c].newLog;
      }
      const auto solutions = R == 0 ? std::vector<Assignment>{Assignment{}} : murtyKBestDecomposed(cost, k);
      for (const auto& sol : solutions) {
        Candidate cand;
        cand.logWeight = fixed - sol.total;
        cand.priorHyp = g;
        cand.outcome.assign(numTracks, kAbsent);
        for (auto i : present) cand.outcome[i] = kMiss;
        cand.newCells = fixedNew;
        for (std::size_t j = 0; j < rows.size(); ++j) {
          const int col = sol.rowToCol[j];
          if (col < C)
            cand.outcome[cols[static_cast<std::size_t>(col)]] = rows[j];
          else
            cand.newCells.push_back(rows[j]);
        }
        std::sort(cand.newCells.begin(), cand.newCells.end());
        candidates.push_back(std::move(cand));
      }
    }
  }

  // Normalize, prune by weight, cap.
  {
    std::vector<double> logs;
    logs.reserve(candidates.size());
    for (const auto& c : candidates) logs.push_back(c.logWeight);
    const double lse = logSumExp(logs);
    for (auto& c : candidates) c.logWeight -= lse;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.logWeight > b.logWeight; });
    std::size_t keep = 0;
    while (keep < candidates.size() && static_cast<int>(keep) < cfg.maxHypotheses &&
           (keep == 0 || std::exp(candidates[keep].logWeight) >= cfg.hypothesisPruneThreshold))
      ++keep;
    candidates.resize(keep);
  }

  // Materialize posterior tracks and hypotheses.
  PmbmDensity post;
  post.undetectedDensity = prior.undetectedDensity;
  post.nextTrackId = prior.nextTrackId;
  post.hypotheses.clear();
  std::vector<EotTrack> tracks(numTracks);
  std::vector<std::map<std::pair<int, int>, int>> childIndex(numTracks);
  for (std::size_t i = 0; i < numTracks; ++i) {
    tracks[i].trackId = prior.tracks[i].trackId;
    tracks[i].classLabel = prior.tracks[i].classLabel;
  }
  std::map<int, std::size_t> newTrackOfCell;
  const auto addChild = [&](std::size_t i, int parent, int outcome, const BernoulliEOT& b, std::size_t n) {
    auto [it, inserted] = childIndex[i].emplace(std::make_pair(parent, outcome),
                                                static_cast<int>(tracks[i].hypotheses.size()));
    if (inserted) tracks[i].hypotheses.push_back({b, parent, n});
    return it->second;
  };
  std::vector<GlobalHypothesis> hyps;
  for (const auto& cand : candidates) {
    GlobalHypothesis gh;
    gh.weight = std::exp(cand.logWeight);
    gh.selectors.assign(numTracks, -1);
    const auto& parentSel = prior.hypotheses[cand.priorHyp].selectors;
    for (std::size_t i = 0; i < numTracks; ++i) {
      const int o = cand.outcome[i];
      if (o == kAbsent) continue;
      const int l = parentSel[i];
      const auto& br = branches[i][static_cast<std::size_t>(l)];
      if (o == kMiss) {
        if (br.missed.existence >= cfg.existencePruneThreshold && br.missed.existence > 0.0)
          gh.selectors[i] = addChild(i, l, kMiss, br.missed, 0);
      } else {
        const auto& hit = br.hits[static_cast<std::size_t>(br.hitIndex[static_cast<std::size_t>(o)])];
        gh.selectors[i] = addChild(i, l, o, hit.second, cells[static_cast<std::size_t>(o)].cluster->count());
      }
    }
    for (int c : cand.newCells) {
      const auto& cell = cells[static_cast<std::size_t>(c)];
      if (!(cell.birth.existence >= cfg.existencePruneThreshold && cell.birth.existence > 0.0)) continue;
      auto [it, inserted] = newTrackOfCell.emplace(c, tracks.size());
      if (inserted) {
        EotTrack t;
        t.classLabel = cell.cls;
        t.hypotheses.push_back({cell.birth, -1, cell.cluster->count()});
        tracks.push_back(std::move(t));
      }
      gh.selectors.resize(tracks.size(), -1);
      gh.selectors[it->second] = 0;
    }
    hyps.push_back(std::move(gh));
  }

  // Merge identical hypotheses, drop tracks absent everywhere.
  std::map<std::vector<int>, std::size_t> seen;
  for (auto& gh : hyps) {
    gh.selectors.resize(tracks.size(), -1);
    auto [it, inserted] = seen.emplace(gh.selectors, post.hypotheses.size());
    if (inserted)
      post.hypotheses.push_back(std::move(gh));
    else
      post.hypotheses[it->second].weight += gh.weight;
  }
  std::vector<int> remap(tracks.size(), -1);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const bool used = std::any_of(post.hypotheses.begin(), post.hypotheses.end(),
                                  [&](const GlobalHypothesis& gh) { return gh.selectors[i] >= 0; });
    if (!used) continue;
    remap[i] = static_cast<int>(post.tracks.size());
    if (i >= numTracks) tracks[i].trackId = post.nextTrackId++;
    for (auto& h : tracks[i].hypotheses) h.bernoulli.ggiw.trackId = tracks[i].trackId;
    post.tracks.push_back(std::move(tracks[i]));
  }
  double total = 0.0;
  for (auto& gh : post.hypotheses) {
    std::vector<int> sel(post.tracks.size(), -1);
    for (std::size_t i = 0; i < gh.selectors.size(); ++i)
      if (remap[i] >= 0) sel[static_cast<std::size_t>(remap[i])] = gh.selectors[i];
    gh.selectors = std::move(sel);
    total += gh.weight;
  }
  for (auto& gh : post.hypotheses) gh.weight /= total;

  // Undetected objects keep the mass that was not detected.
  for (std::size_t s = 0; s < kEotSlots; ++s) {
    const auto& par = s < kNumClasses ? cfg.classes[s] : cfg.generic;
    GgiwComponent tmpl;
    tmpl.rate = par.birthRate;
    post.undetectedDensity[s] *= 1.0 - eotPredictedDetectionProb(tmpl, par);
  }
  return post;
}

/// Index of the highest-weight global hypothesis (first on ties), or -1.
inline int bestHypothesis(const PmbmDensity& d) {
  int best = -1;
  for (std::size_t g = 0; g < d.hypotheses.size(); ++g)
    if (best < 0 || d.hypotheses[g].weight > d.hypotheses[static_cast<std::size_t>(best)].weight)
      best = static_cast<int>(g);
  return best;
}

/// Confirmed objects of the best global hypothesis, after NMS. Tracks without a
/// detector class are labelled from their box size.
inline std::vector<TrackRecord> eotExtract(const PmbmDensity& d, const EotConfig& cfg, std::int64_t frameIdx) {
  std::vector<TrackRecord> out;
  const int g = bestHypothesis(d);
  if (g < 0) return out;
  const auto& sel = d.hypotheses[static_cast<std::size_t>(g)].selectors;
  for (std::size_t i = 0; i < d.tracks.size(); ++i) {
    if (sel[i] < 0) continue;
    const auto& track = d.tracks[i];
    const auto& b = track.hypotheses[static_cast<std::size_t>(sel[i])].bernoulli;
    if (b.existence < cfg.existenceExtractThreshold) continue;
    TrackRecord rec;
    rec.trackId = track.trackId;
    rec.frameIdx = frameIdx;
    rec.existence = b.existence;
    rec.box = extentToBox(b.ggiw, cfg, cfg.params(track.classLabel));
    rec.classLabel = track.classLabel ? *track.classLabel : heuristicClassify(rec.box, cfg.sizeTable);
    if (!track.classLabel) {
      const auto& p = cfg.classes[classIndex(rec.classLabel)];
      rec.box.cz = p.boxCenterZ;
      rec.box.height = p.boxHeight;
    }
    out.push_back(rec);
  }
  return nmsBoxes(std::move(out), cfg.nmsIouThreshold);
}

}  // namespace radmot
