#pragma once

// Point-object tracker: Poisson multi-Bernoulli filter that keeps only the
// best global association hypothesis (GNN-PMB). Detection boxes enter as BEV
// position measurements; box geometry is copied from the last associated
// detection.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "radmot/assignment.hpp"
#include "radmot/core.hpp"
#include "radmot/kinematics.hpp"

namespace radmot {

struct PotClassParams {
  double detectionProb = 0.9;
  double clutterIntensity = 1e-3;  ///< false detections per m^2 per scan
  Matrix2 measurementNoise = Matrix2::Identity() * 0.09;
  double birthDensity = 1e-4;  ///< new objects per m^2 per scan
};

struct PotConfig {
  double survivalProb = 0.99;
  double processNoise = 2.0;  ///< white acceleration intensity q
  double gateThreshold = kChi2Gate2Dof99;
  double existenceExtractThreshold = 0.5;
  double existencePruneThreshold = 0.01;
  double pppPruneThreshold = 1e-5;
  double birthVelocityStd = 5.0;
  bool scoreModulatesPd = false;
  bool scoreModulatesBirth = false;
  std::array<PotClassParams, kNumClasses> classes{};

  [[nodiscard]] const PotClassParams& params(ObjectClass c) const { return classes[classIndex(c)]; }

  void validate() const {
    const auto prob = [](double p) { return p > 0.0 && p <= 1.0; };
    if (!prob(survivalProb)) throw Error(ErrorCode::InvalidConfig, "pot.survivalProb must be in (0,1]");
    if (!(processNoise >= 0.0)) throw Error(ErrorCode::InvalidConfig, "pot.processNoise must be >= 0");
    if (!(gateThreshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "pot.gateThreshold must be > 0");
    if (!(existencePruneThreshold >= 0.0 && existencePruneThreshold <= existenceExtractThreshold &&
          existenceExtractThreshold <= 1.0))
      throw Error(ErrorCode::InvalidConfig,
                  "pot thresholds must satisfy 0 <= prune <= extract <= 1");
    if (!(birthVelocityStd > 0.0)) throw Error(ErrorCode::InvalidConfig, "pot.birthVelocityStd must be > 0");
    for (const auto& p : classes) {
      if (!prob(p.detectionProb)) throw Error(ErrorCode::InvalidConfig, "pot.detectionProb must be in (0,1]");
      if (!(p.clutterIntensity > 0.0)) throw Error(ErrorCode::InvalidConfig, "pot.clutterIntensity must be > 0");
      if (!(p.birthDensity >= 0.0)) throw Error(ErrorCode::InvalidConfig, "pot.birthDensity must be >= 0");
      Eigen::SelfAdjointEigenSolver<Matrix2> es(p.measurementNoise, Eigen::EigenvaluesOnly);
      if (!(es.eigenvalues().minCoeff() > 0.0) ||
          std::abs(p.measurementNoise(0, 1) - p.measurementNoise(1, 0)) > 1e-12)
        throw Error(ErrorCode::InvalidConfig, "pot.measurementNoise must be SPD");
    }
  }
};

struct PppComponent {
  double weight = 0.0;
  KinematicGaussian state;
  ObjectClass classLabel = ObjectClass::other;
};

/// Undetected-object intensity: a spatially uniform part per class plus
/// Gaussian components recycled from low-existence Bernoullis.
struct PppIntensity {
  std::array<double, kNumClasses> uniformDensity{};
  std::vector<PppComponent> components;
};

struct BernoulliPot {
  double existence = 0.0;
  KinematicGaussian state;
  TrackId trackId = 0;
  ObjectClass classLabel = ObjectClass::other;
  double lastScore = 0.0;
  Box3D lastBox;
};

struct PmbDensity {
  PppIntensity ppp;
  std::vector<BernoulliPot> bernoullis;
  TrackId nextTrackId = 1;
};

inline PmbDensity potPredict(PmbDensity state, double dt, const PotConfig& cfg) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "dt must be positive");
  for (auto& b : state.bernoullis) {
    b.existence *= cfg.survivalProb;
    b.state = predictConstantVelocity(b.state, dt, cfg.processNoise);
  }
  for (auto& c : state.ppp.components) {
    c.weight *= cfg.survivalProb;
    c.state = predictConstantVelocity(c.state, dt, cfg.processNoise);
  }
  std::erase_if(state.ppp.components,
                [&](const PppComponent& c) { return c.weight < cfg.pppPruneThreshold; });
  for (auto c : kAllClasses) {
    auto& d = state.ppp.uniformDensity[classIndex(c)];
    d = cfg.survivalProb * d + cfg.params(c).birthDensity;
  }
  return state;
}

/// Existence after a missed detection: r(1 - Pd) / (1 - r Pd).
inline double missedExistence(double r, double pd) {
  const double denom = 1.0 - r * pd;
  return denom > 0.0 ? std::clamp(r * (1.0 - pd) / denom, 0.0, 1.0) : 0.0;
}

namespace detail {

struct PotNewObject {
  double weight = 0.0;  // e: summed PPP detection weight
  KinematicGaussian state;
};

inline double hitProb(const PotConfig& cfg, ObjectClass c, double score) {
  const double pd = cfg.params(c).detectionProb;
  return cfg.scoreModulatesPd ? pd * score : pd;
}

inline PotNewObject potNewObject(const PppIntensity& ppp, const Detection& det, const PotConfig& cfg) {
  const auto& cp = cfg.params(det.classLabel);
  const Vector2 z(det.box.cx, det.box.cy);
  const double pd = hitProb(cfg, det.classLabel, det.score);
  const double birthScale = cfg.scoreModulatesBirth ? det.score : 1.0;

  std::vector<double> w;
  std::vector<KinematicGaussian> g;
  if (const double d = ppp.uniformDensity[classIndex(det.classLabel)] * birthScale; d > 0.0) {
    // A uniform position prior integrates the position likelihood to the density itself.
    KinematicGaussian s;
    s.mean << z.x(), z.y(), 0.0, 0.0;
    s.covariance.setZero();
    s.covariance.topLeftCorner<2, 2>() = cp.measurementNoise;
    s.covariance.bottomRightCorner<2, 2>() =
        Matrix2::Identity() * cfg.birthVelocityStd * cfg.birthVelocityStd;
    w.push_back(pd * d);
    g.push_back(s);
  }
  for (const auto& c : ppp.components) {
    if (c.classLabel != det.classLabel) continue;
    const auto u = kalmanPositionUpdate(c.state, z, cp.measurementNoise);
    if (u.mahalanobis2 > cfg.gateThreshold) continue;
    w.push_back(pd * c.weight * std::exp(u.logLikelihood));
    g.push_back(u.posterior);
  }

  PotNewObject out;
  for (double x : w) out.weight += x;
  if (out.weight <= 0.0) return out;
  // Moment-match the mixture into one Gaussian.
  Vector4 mean = Vector4::Zero();
  for (std::size_t i = 0; i < w.size(); ++i) mean += (w[i] / out.weight) * g[i].mean;
  Matrix4 cov = Matrix4::Zero();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vector4 d = g[i].mean - mean;
    cov += (w[i] / out.weight) * (g[i].covariance + d * d.transpose());
  }
  out.state = {mean, symmetrize(cov)};
  return out;
}

}  // namespace detail

/// One GNN-PMB measurement update. Detections are expected to be filtered by
/// the per-class score threshold already.
inline PmbDensity potUpdate(PmbDensity state, std::span<const Detection> detections,
                            const PotConfig& cfg) {
  const int n = static_cast<int>(state.bernoullis.size());
  const int m = static_cast<int>(detections.size());

  std::vector<double> missLog(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& b = state.bernoullis[i];
    const double pd = cfg.params(b.classLabel).detectionProb;
    missLog[i] = std::log(std::max(1.0 - b.existence * pd, 1e-300));
  }

  // Columns: [0, n) existing Bernoullis, [n, n + m) new object / clutter per detection.
  CostMatrix cost = CostMatrix::Constant(m, n + m, kForbidden);
  std::vector<std::vector<PositionUpdate>> hits(static_cast<std::size_t>(m));
  std::vector<detail::PotNewObject> births(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const Detection& det = detections[j];
    const auto& cp = cfg.params(det.classLabel);
    const Vector2 z(det.box.cx, det.box.cy);
    hits[j].resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& b = state.bernoullis[i];
      if (b.classLabel != det.classLabel || b.existence <= 0.0) continue;
      hits[j][i] = kalmanPositionUpdate(b.state, z, cp.measurementNoise);
      if (hits[j][i].mahalanobis2 > cfg.gateThreshold) continue;
      const double hitLog = std::log(b.existence) +
                            std::log(detail::hitProb(cfg, det.classLabel, det.score)) +
                            hits[j][i].logLikelihood;
      cost(j, i) = -(hitLog - missLog[i]);
    }
    births[j] = detail::potNewObject(state.ppp, det, cfg);
    cost(j, n + j) = -std::log(cp.clutterIntensity + births[j].weight);
  }

  const Assignment best = solveAssignment(cost);

  std::vector<int> bernoulliToDet(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < m; ++j)
    if (best.rowToCol[j] < n) bernoulliToDet[best.rowToCol[j]] = j;

  for (int i = 0; i < n; ++i) {
    auto& b = state.bernoullis[i];
    if (const int j = bernoulliToDet[i]; j >= 0) {
      b.existence = 1.0;
      b.state = hits[j][i].posterior;
      b.classLabel = detections[j].classLabel;
      b.lastScore = detections[j].score;
      b.lastBox = detections[j].box;
    } else {
      b.existence = missedExistence(b.existence, cfg.params(b.classLabel).detectionProb);
    }
  }
  for (int j = 0; j < m; ++j) {
    if (best.rowToCol[j] < n) continue;
    const auto& cp = cfg.params(detections[j].classLabel);
    const auto& nb = births[j];
    if (nb.weight <= 0.0) continue;
    BernoulliPot b;
    b.existence = nb.weight / (cp.clutterIntensity + nb.weight);
    b.state = nb.state;
    b.trackId = state.nextTrackId++;
    b.classLabel = detections[j].classLabel;
    b.lastScore = detections[j].score;
    b.lastBox = detections[j].box;
    state.bernoullis.push_back(b);
  }

  // Undetected intensity after the missed-detection update.
  for (auto c : kAllClasses)
    state.ppp.uniformDensity[classIndex(c)] *= 1.0 - cfg.params(c).detectionProb;
  for (auto& c : state.ppp.components) c.weight *= 1.0 - cfg.params(c.classLabel).detectionProb;

  // Recycle low-existence Bernoullis into the PPP.
  std::vector<BernoulliPot> kept;
  kept.reserve(state.bernoullis.size());
  for (auto& b : state.bernoullis) {
    if (b.existence < cfg.existencePruneThreshold) {
      if (b.existence >= cfg.pppPruneThreshold)
        state.ppp.components.push_back({b.existence, b.state, b.classLabel});
    } else {
      kept.push_back(std::move(b));
    }
  }
  state.bernoullis = std::move(kept);
  std::erase_if(state.ppp.components,
                [&](const PppComponent& c) { return c.weight < cfg.pppPruneThreshold; });
  return state;
}

inline std::vector<TrackRecord> potExtract(const PmbDensity& state, const PotConfig& cfg,
                                           std::int64_t frameIdx) {
  std::vector<TrackRecord> out;
  for (const auto& b : state.bernoullis) {
    if (b.existence < cfg.existenceExtractThreshold) continue;
    TrackRecord r;
    r.trackId = b.trackId;
    r.frameIdx = frameIdx;
    r.box = b.lastBox;
    r.box.cx = b.state.mean(0);
    r.box.cy = b.state.mean(1);
    r.classLabel = b.classLabel;
    r.existence = std::clamp(b.existence, 0.0, 1.0);
    out.push_back(r);
  }
  return out;
}

}  // namespace radmot
