#pragma once

// The three tracking frameworks, run online frame by frame:
//   tbd-pot  detector boxes -> GNN-PMB point tracker
//   jdt-eot  radar points -> gating + clustering -> GGIW-PMBM
//   tbd-eot  points inside detector boxes -> per-class clustering -> GGIW-PMBM

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radmot/core.hpp"
#include "radmot/eot_ggiw_pmbm.hpp"
#include "radmot/geometry.hpp"
#include "radmot/partitioning.hpp"
#include "radmot/pot_gnn_pmb.hpp"

namespace radmot {

enum class Framework { tbdPot, jdtEot, tbdEot };

inline std::string_view to_string(Framework f) {
  switch (f) {
    case Framework::tbdPot: return "tbd-pot";
    case Framework::jdtEot: return "jdt-eot";
    case Framework::tbdEot: return "tbd-eot";
  }
  return "tbd-pot";
}

inline Framework parseFramework(std::string_view s) {
  for (auto f : {Framework::tbdPot, Framework::jdtEot, Framework::tbdEot})
    if (to_string(f) == s) return f;
  throw Error(ErrorCode::InvalidConfig, "unknown framework '" + std::string(s) + "'");
}

struct PipelineConfig {
  Framework framework = Framework::tbdPot;
  PotConfig pot;
  EotConfig eot;
  ClusteringConfig clustering;
  std::array<double, kNumClasses> scoreThreshold{0.3, 0.3, 0.3, 0.3};  ///< detector boxes below are dropped
  bool radialSpeedPrefilter = false;
  double minRadialSpeed = 0.3;  ///< m/s, ego-compensated
  double nominalRate = 10.0;    ///< Hz, used when timestamps do not advance
  bool adaptiveGate = false;    ///< widen each gate by the object's extent
  double adaptiveGateSigma = 2.0;

  void validate() const {
    pot.validate();
    eot.validate();
    clustering.validate();
    for (double t : scoreThreshold)
      if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidConfig, "scoreThreshold must lie in [0,1]");
    if (!(minRadialSpeed >= 0.0)) throw Error(ErrorCode::InvalidConfig, "minRadialSpeed must be >= 0");
    if (!(nominalRate > 0.0)) throw Error(ErrorCode::InvalidConfig, "nominalRate must be > 0");
    if (!(adaptiveGateSigma >= 0.0)) throw Error(ErrorCode::InvalidConfig, "adaptiveGateSigma must be >= 0");
  }
};

namespace detail {

inline double frameDt(double previous, double current, double nominalRate) {
  const double dt = current - previous;
  return dt > 0.0 ? dt : 1.0 / nominalRate;
}

inline std::vector<Detection> passingDetections(std::span<const Detection> dets, const PipelineConfig& cfg) {
  std::vector<Detection> out;
  for (const auto& d : dets)
    if (d.score >= cfg.scoreThreshold[classIndex(d.classLabel)]) out.push_back(d);
  return out;
}

inline std::vector<Vector2> bevPoints(std::span<const RadarPoint> points) {
  std::vector<Vector2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.emplace_back(p.x, p.y);
  return out;
}

inline std::vector<std::size_t> candidatePoints(const Frame& f, const PipelineConfig& cfg) {
  if (cfg.radialSpeedPrefilter) return filterLowRadialSpeed(f.points, cfg.minRadialSpeed, f.egoInfo);
  std::vector<std::size_t> all(f.points.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

/// One gate per local hypothesis that any global hypothesis keeps alive.
inline std::vector<GateRegion> gateRegions(const PmbmDensity& d, const PipelineConfig& cfg) {
  std::vector<GateRegion> out;
  for (std::size_t i = 0; i < d.tracks.size(); ++i) {
    const auto& hyps = d.tracks[i].hypotheses;
    std::vector<char> live(hyps.size(), 0);
    for (const auto& g : d.hypotheses)
      if (g.selectors[i] >= 0) live[static_cast<std::size_t>(g.selectors[i])] = 1;
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      if (!live[h] || hyps[h].bernoulli.existence <= 0.0) continue;
      const auto& c = hyps[h].bernoulli.ggiw;
      double radius = cfg.eot.gateRadius;
      if (cfg.adaptiveGate) {
        Eigen::SelfAdjointEigenSolver<Matrix2> es(c.extent.expected(), Eigen::EigenvaluesOnly);
        radius += cfg.adaptiveGateSigma * std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
      }
      out.push_back({c.kinematics.mean.head<2>(), radius});
    }
  }
  return out;
}

/// Splits `subset` into points inside and outside the gates.
inline GateResult gateSubset(std::span<const Vector2> points, std::span<const std::size_t> subset,
                             std::span<const GateRegion> regions) {
  std::vector<Vector2> sub;
  sub.reserve(subset.size());
  for (auto i : subset) sub.push_back(points[i]);
  auto local = gatePoints(sub, regions);
  for (auto& i : local.gated) i = subset[i];
  for (auto& i : local.ungated) i = subset[i];
  return local;
}

}  // namespace detail

struct PointSelection {
  std::vector<std::size_t> indices;          ///< selected points, ascending
  std::vector<ObjectClass> classes;          ///< per input point; meaningful only where selected
};

/// Keeps points inside at least one box (BEV, boundary inclusive). A point in
/// several boxes takes the class of the highest-scoring one; equal scores go
/// to the earlier box.
inline PointSelection selectPointsInBoxes(std::span<const RadarPoint> points, std::span<const Detection> boxes) {
  PointSelection out;
  out.classes.assign(points.size(), ObjectClass::other);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Detection* best = nullptr;
    for (const auto& d : boxes)
      if (pointInRotatedBox(points[i], d.box) && (!best || d.score > best->score)) best = &d;
    if (!best) continue;
    out.indices.push_back(i);
    out.classes[i] = best->classLabel;
  }
  return out;
}

class TbdPotTracker {
 public:
  explicit TbdPotTracker(PipelineConfig cfg) : cfg_(std::move(cfg)) { cfg_.pot.validate(); }

  std::vector<TrackRecord> step(const Frame& f) {
    if (!f.hasDetections) throw Error(ErrorCode::MissingDetections, "frame " + std::to_string(f.frameIdx) + " has no detections");
    if (lastTimestamp_) {
      state_ = potPredict(std::move(state_), detail::frameDt(*lastTimestamp_, f.timestamp, cfg_.nominalRate), cfg_.pot);
    } else {
      for (auto c : kAllClasses) state_.ppp.uniformDensity[classIndex(c)] = cfg_.pot.params(c).birthDensity;
    }
    lastTimestamp_ = f.timestamp;
    const auto dets = detail::passingDetections(f.detections, cfg_);
    state_ = potUpdate(std::move(state_), dets, cfg_.pot);
    return potExtract(state_, cfg_.pot, f.frameIdx);
  }

  [[nodiscard]] const PmbDensity& state() const { return state_; }

 private:
  PipelineConfig cfg_;
  PmbDensity state_;
  std::optional<double> lastTimestamp_;
};

/// Shared EOT driver; `Detector` selects tbd-eot behaviour.
template <bool Detector>
class EotTracker {
 public:
  explicit EotTracker(PipelineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.eot.validate();
    cfg_.clustering.validate();
  }

  std::vector<TrackRecord> step(const Frame& f) {
    if (!f.hasPoints) throw Error(ErrorCode::MissingPoints, "frame " + std::to_string(f.frameIdx) + " has no point cloud");
    if (Detector && !f.hasDetections)
      throw Error(ErrorCode::MissingDetections, "frame " + std::to_string(f.frameIdx) + " has no detections");
    if (lastTimestamp_) {
      state_ = eotPredict(std::move(state_), detail::frameDt(*lastTimestamp_, f.timestamp, cfg_.nominalRate), cfg_.eot);
    } else {
      for (std::size_t s = 0; s < kEotSlots; ++s)
        state_.undetectedDensity[s] = (s < kNumClasses ? cfg_.eot.classes[s] : cfg_.eot.generic).birthDensity;
    }
    lastTimestamp_ = f.timestamp;

    const auto pts = detail::bevPoints(f.points);
    auto candidates = detail::candidatePoints(f, cfg_);
    std::vector<ObjectClass> pointClass;
    if constexpr (Detector) {
      const auto dets = detail::passingDetections(f.detections, cfg_);
      auto sel = selectPointsInBoxes(f.points, dets);
      std::vector<std::size_t> kept;
      std::set_intersection(candidates.begin(), candidates.end(), sel.indices.begin(), sel.indices.end(),
                            std::back_inserter(kept));
      candidates = std::move(kept);
      pointClass = std::move(sel.classes);
    }

    const auto regions = detail::gateRegions(state_, cfg_);
    const auto gate = detail::gateSubset(pts, candidates, regions);
    std::vector<std::vector<std::size_t>> groups;
    const auto addGroup = [&](std::vector<std::size_t> g) {
      if (!g.empty()) groups.push_back(std::move(g));
    };
    if constexpr (Detector) {
      for (auto c : kAllClasses)
        for (const auto* src : {&gate.gated, &gate.ungated}) {
          std::vector<std::size_t> g;
          for (auto i : *src)
            if (pointClass[i] == c) g.push_back(i);
          addGroup(std::move(g));
        }
    } else {
      addGroup(gate.gated);
      addGroup(gate.ungated);
    }
    const auto partitions = generatePartitions(pts, groups, cfg_.clustering);
    state_ = eotUpdateWithPartitions(state_, partitions, cfg_.eot, pointClass);
    return eotExtract(state_, cfg_.eot, f.frameIdx);
  }

  [[nodiscard]] const PmbmDensity& state() const { return state_; }

 private:
  PipelineConfig cfg_;
  PmbmDensity state_;
  std::optional<double> lastTimestamp_;
};

using JdtEotTracker = EotTracker<false>;
using TbdEotTracker = EotTracker<true>;

namespace detail {

template <typename Tracker>
std::vector<TrackRecord> runAll(std::span<const Frame> frames, const PipelineConfig& cfg) {
  Tracker tracker(cfg);
  std::vector<TrackRecord> out;
  for (const auto& f : frames) {
    auto recs = tracker.step(f);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

inline void requireChannel(std::span<const Frame> frames, bool points) {
  for (const auto& f : frames) {
    if (points && !f.hasPoints)
      throw Error(ErrorCode::MissingPoints, "frame " + std::to_string(f.frameIdx) + " has no point cloud");
    if (!points && !f.hasDetections)
      throw Error(ErrorCode::MissingDetections, "frame " + std::to_string(f.frameIdx) + " has no detections");
  }
}

}  // namespace detail

inline std::vector<TrackRecord> runTbdPot(std::span<const Frame> frames, const PipelineConfig& cfg) {
  detail::requireChannel(frames, false);
  return detail::runAll<TbdPotTracker>(frames, cfg);
}

inline std::vector<TrackRecord> runJdtEot(std::span<const Frame> frames, const PipelineConfig& cfg) {
  detail::requireChannel(frames, true);
  return detail::runAll<JdtEotTracker>(frames, cfg);
}

inline std::vector<TrackRecord> runTbdEot(std::span<const Frame> frames, const PipelineConfig& cfg) {
  detail::requireChannel(frames, true);
  detail::requireChannel(frames, false);
  return detail::runAll<TbdEotTracker>(frames, cfg);
}

inline std::vector<TrackRecord> runPipeline(std::span<const Frame> frames, const PipelineConfig& cfg) {
  switch (cfg.framework) {
    case Framework::tbdPot: return runTbdPot(frames, cfg);
    case Framework::jdtEot: return runJdtEot(frames, cfg);
    case Framework::tbdEot: return runTbdEot(frames, cfg);
  }
  return {};
}

}  // namespace radmot
