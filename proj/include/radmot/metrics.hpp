#pragma once

// Evaluation against ground truth: centre-distance similarity, CLEAR MOT
// counts and HOTA with its DetA/AssA/LocA decomposition. All matching is on
// the BEV plane.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "radmot/assignment.hpp"
#include "radmot/core.hpp"
#include "radmot/geometry.hpp"

namespace radmot {

inline std::vector<double> defaultAlphaGrid() {
  std::vector<double> g;
  for (int k = 1; k <= 19; ++k) g.push_back(0.05 * k);
  return g;
}

struct MetricsConfig {
  double d0 = 4.0;
  double alphaClear = 0.5;
  std::vector<double> alphaGrid = defaultAlphaGrid();
  bool classAgnostic = false;
  std::optional<ObjectClass> classFilter;  ///< evaluate one class only

  void validate() const {
    if (!(d0 > 0)) throw Error(ErrorCode::InvalidConfig, "metrics.d0 must be > 0");
    const auto inRange = [](double a) { return a > 0 && a < 1; };
    if (!inRange(alphaClear)) throw Error(ErrorCode::InvalidConfig, "metrics.alphaClear must lie in (0,1)");
    if (alphaGrid.empty() || !std::all_of(alphaGrid.begin(), alphaGrid.end(), inRange))
      throw Error(ErrorCode::InvalidConfig, "metrics.alphaGrid must be non-empty with values in (0,1)");
  }
};

/// max(0, 1 - d / d0) on BEV centre distance.
inline double similarity(const Eigen::Vector2d& p, const Eigen::Vector2d& q, double d0) {
  if (!(d0 > 0)) throw Error(ErrorCode::InvalidArgument, "d0 must be > 0");
  return std::max(0.0, 1.0 - (p - q).norm() / d0);
}

inline double similarity(const Box3D& a, const Box3D& b, double d0) { return similarity(bevCenter(a), bevCenter(b), d0); }

struct FrameMatch {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  ///< (estimate, ground truth)
  std::vector<std::size_t> falsePositives;
  std::vector<std::size_t> falseNegatives;
  double similaritySum = 0.0;
};

namespace detail {

inline bool classMatches(ObjectClass est, ObjectClass gt, const MetricsConfig& cfg) {
  return cfg.classAgnostic || est == gt;
}

/// Maximum-score partial matching of rows to columns; pairs with a
/// non-finite score are never matched.
inline std::vector<int> maxScoreMatching(const Eigen::MatrixXd& score) {
  const auto rows = score.rows(), cols = score.cols();
  if (rows == 0 || cols == 0) return std::vector<int>(static_cast<std::size_t>(rows), -1);
  CostMatrix cost = CostMatrix::Constant(rows, cols + rows, kForbidden);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j)
      if (std::isfinite(score(i, j))) cost(i, j) = -score(i, j);
    cost(i, cols + i) = 0.0;
  }
  const auto a = solveAssignment(cost);
  std::vector<int> out(static_cast<std::size_t>(rows), -1);
  for (Eigen::Index i = 0; i < rows; ++i)
    if (a.rowToCol[static_cast<std::size_t>(i)] < cols) out[static_cast<std::size_t>(i)] = a.rowToCol[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace detail

/// Pairs with S >= alpha (and matching class unless class-agnostic) are
/// matched maximising total similarity; keeping a ground truth's previous
/// track (`previousMatches`: gtId -> trackId) dominates any similarity gain.
inline FrameMatch matchFrame(std::span<const TrackRecord> estimates, std::span<const GroundTruthObject> groundTruth,
                             double alpha, const MetricsConfig& cfg,
                             const std::map<std::int64_t, TrackId>& previousMatches = {}) {
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
  constexpr double kContinuationBonus = 1000.0;
  const auto G = static_cast<Eigen::Index>(groundTruth.size());
  const auto E = static_cast<Eigen::Index>(estimates.size());
  Eigen::MatrixXd score = Eigen::MatrixXd::Constant(G, E, kForbidden);
  for (Eigen::Index g = 0; g < G; ++g) {
    const auto& gt = groundTruth[static_cast<std::size_t>(g)];
    const auto prev = previousMatches.find(gt.gtId);
    for (Eigen::Index e = 0; e < E; ++e) {
      const auto& est = estimates[static_cast<std::size_t>(e)];
      if (!detail::classMatches(est.classLabel, gt.classLabel, cfg)) continue;
      const double s = similarity(est.box, gt.box, cfg.d0);
      if (s < alpha) continue;
      score(g, e) = s + (prev != previousMatches.end() && prev->second == est.trackId ? kContinuationBonus : 0.0);
    }
  }
  const auto match = detail::maxScoreMatching(score);
  FrameMatch out;
  std::vector<char> used(static_cast<std::size_t>(E), 0);
  for (Eigen::Index g = 0; g < G; ++g) {
    const int e = match[static_cast<std::size_t>(g)];
    if (e < 0) {
      out.falseNegatives.push_back(static_cast<std::size_t>(g));
      continue;
    }
    used[static_cast<std::size_t>(e)] = 1;
    out.pairs.emplace_back(static_cast<std::size_t>(e), static_cast<std::size_t>(g));
    out.similaritySum += similarity(estimates[static_cast<std::size_t>(e)].box, groundTruth[static_cast<std::size_t>(g)].box, cfg.d0);
  }
  for (Eigen::Index e = 0; e < E; ++e)
    if (!used[static_cast<std::size_t>(e)]) out.falsePositives.push_back(static_cast<std::size_t>(e));
  return out;
}

struct ClearResult {
  std::int64_t tp = 0, fn = 0, fp = 0, ids = 0;
  double mota = 0.0;
  double motp = 0.0;
};

/// MOTA = 1 - (FN + FP + IDS) / (TP + FN); the denominator is floored at 1.
inline double motaFromCounts(std::int64_t tp, std::int64_t fn, std::int64_t fp, std::int64_t ids) {
  const double gt = static_cast<double>(std::max<std::int64_t>(1, tp + fn));
  return 1.0 - static_cast<double>(fn + fp + ids) / gt;
}

/// Estimates and ground truth of one frame after class filtering.
struct EvalFrame {
  std::vector<TrackRecord> estimates;
  std::vector<GroundTruthObject> groundTruth;
};

/// Aligns records with the ground-truth frames by frame index. Records whose
/// frame is absent from `frames` are ignored.
inline std::vector<EvalFrame> alignFrames(std::span<const TrackRecord> records, std::span<const Frame> frames,
                                          const MetricsConfig& cfg) {
  std::map<std::int64_t, std::size_t> slot;
  std::vector<EvalFrame> out(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    slot[frames[k].frameIdx] = k;
    for (const auto& g : frames[k].groundTruth)
      if (!cfg.classFilter || g.classLabel == *cfg.classFilter) out[k].groundTruth.push_back(g);
  }
  for (const auto& r : records) {
    const auto it = slot.find(r.frameIdx);
    if (it == slot.end()) continue;
    if (!cfg.classFilter || r.classLabel == *cfg.classFilter) out[it->second].estimates.push_back(r);
  }
  return out;
}

/// CLEAR matching; `onMatch(estimate, groundTruth)` sees every TP pair in frame order.
template <typename OnMatch>
ClearResult clearMetricsVisit(std::span<const TrackRecord> records, std::span<const Frame> frames, double alpha,
                              const MetricsConfig& cfg, OnMatch&& onMatch) {
  ClearResult res;
  double simSum = 0.0;
  std::map<std::int64_t, TrackId> lastMatch;      // for identity switches (gaps allowed)
  std::map<std::int64_t, TrackId> previousFrame;  // for the continuation bonus
  for (const auto& f : alignFrames(records, frames, cfg)) {
    const auto m = matchFrame(f.estimates, f.groundTruth, alpha, cfg, previousFrame);
    previousFrame.clear();
    for (const auto& [e, g] : m.pairs) {
      const auto gtId = f.groundTruth[g].gtId;
      const auto trId = f.estimates[e].trackId;
      const auto it = lastMatch.find(gtId);
      if (it != lastMatch.end() && it->second != trId) ++res.ids;
      lastMatch[gtId] = trId;
      previousFrame[gtId] = trId;
      onMatch(f.estimates[e], f.groundTruth[g]);
    }
    res.tp += static_cast<std::int64_t>(m.pairs.size());
    res.fn += static_cast<std::int64_t>(m.falseNegatives.size());
    res.fp += static_cast<std::int64_t>(m.falsePositives.size());
    simSum += m.similaritySum;
  }
  res.mota = motaFromCounts(res.tp, res.fn, res.fp, res.ids);
  res.motp = res.tp > 0 ? simSum / static_cast<double>(res.tp) : 0.0;
  return res;
}

inline ClearResult clearMetricsAt(std::span<const TrackRecord> records, std::span<const Frame> frames, double alpha,
                                  const MetricsConfig& cfg) {
  return clearMetricsVisit(records, frames, alpha, cfg, [](const TrackRecord&, const GroundTruthObject&) {});
}

inline ClearResult clearMetrics(std::span<const TrackRecord> records, std::span<const Frame> frames,
                                const MetricsConfig& cfg) {
  return clearMetricsAt(records, frames, cfg.alphaClear, cfg);
}

inline std::vector<std::pair<double, double>> motaSweep(std::span<const TrackRecord> records,
                                                        std::span<const Frame> frames, std::span<const double> alphas,
                                                        const MetricsConfig& cfg) {
  if (alphas.empty()) throw Error(ErrorCode::InvalidArgument, "alpha list must not be empty");
  std::vector<std::pair<double, double>> out;
  for (double a : alphas) out.emplace_back(a, clearMetricsAt(records, frames, a, cfg).mota);
  return out;
}

struct HotaAlpha {
  double alpha = 0.0;
  double hota = 0.0, detA = 0.0, assA = 0.0, locA = 0.0;
  std::int64_t tp = 0, fn = 0, fp = 0;
};

struct HotaResult {
  double hota = 0.0, detA = 0.0, assA = 0.0, locA = 0.0;
  std::vector<HotaAlpha> perAlpha;
};

/// HOTA with global alignment: one matching per frame maximising
/// alignment score times similarity, then thresholded at each alpha.
inline HotaResult hota(std::span<const TrackRecord> records, std::span<const Frame> frames, const MetricsConfig& cfg) {
  cfg.validate();
  const auto aligned = alignFrames(records, frames, cfg);
  constexpr double kEps = 1e-10;

  std::map<std::int64_t, int> gtIndex;
  std::map<TrackId, int> trIndex;
  for (const auto& f : aligned) {
    for (const auto& g : f.groundTruth) gtIndex.emplace(g.gtId, static_cast<int>(gtIndex.size()));
    for (const auto& e : f.estimates) trIndex.emplace(e.trackId, static_cast<int>(trIndex.size()));
  }
  const auto nG = static_cast<Eigen::Index>(gtIndex.size());
  const auto nT = static_cast<Eigen::Index>(trIndex.size());

  // Similarity matrices per frame and the global alignment score.
  std::vector<Eigen::MatrixXd> sims;
  Eigen::MatrixXd potential = Eigen::MatrixXd::Zero(nG, nT);
  Eigen::VectorXd gtCount = Eigen::VectorXd::Zero(nG), trCount = Eigen::VectorXd::Zero(nT);
  std::int64_t totalGt = 0, totalTr = 0;
  for (const auto& f : aligned) {
    const auto G = static_cast<Eigen::Index>(f.groundTruth.size());
    const auto T = static_cast<Eigen::Index>(f.estimates.size());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(G, T);
    for (Eigen::Index g = 0; g < G; ++g)
      for (Eigen::Index t = 0; t < T; ++t)
        if (detail::classMatches(f.estimates[static_cast<std::size_t>(t)].classLabel,
                                 f.groundTruth[static_cast<std::size_t>(g)].classLabel, cfg))
          s(g, t) = similarity(f.estimates[static_cast<std::size_t>(t)].box, f.groundTruth[static_cast<std::size_t>(g)].box,
                               cfg.d0);
    const Eigen::VectorXd rowSum = s.rowwise().sum();
    const Eigen::RowVectorXd colSum = s.colwise().sum();
    for (Eigen::Index g = 0; g < G; ++g)
      for (Eigen::Index t = 0; t < T; ++t) {
        const double denom = rowSum(g) + colSum(t) - s(g, t);
        if (denom > kEps)
          potential(gtIndex.at(f.groundTruth[static_cast<std::size_t>(g)].gtId),
                    trIndex.at(f.estimates[static_cast<std::size_t>(t)].trackId)) += s(g, t) / denom;
      }
    for (const auto& g : f.groundTruth) gtCount(gtIndex.at(g.gtId)) += 1;
    for (const auto& e : f.estimates) trCount(trIndex.at(e.trackId)) += 1;
    totalGt += G;
    totalTr += T;
    sims.push_back(std::move(s));
  }
  Eigen::MatrixXd alignment = Eigen::MatrixXd::Zero(nG, nT);
  for (Eigen::Index g = 0; g < nG; ++g)
    for (Eigen::Index t = 0; t < nT; ++t)
      alignment(g, t) = potential(g, t) / (gtCount(g) + trCount(t) - potential(g, t));

  const std::size_t nA = cfg.alphaGrid.size();
  std::vector<std::int64_t> tp(nA, 0);
  std::vector<double> locSum(nA, 0.0);
  std::vector<Eigen::MatrixXd> matches(nA, Eigen::MatrixXd::Zero(nG, nT));
  for (std::size_t k = 0; k < aligned.size(); ++k) {
    const auto& f = aligned[k];
    const auto& s = sims[k];
    const auto G = s.rows(), T = s.cols();
    if (G == 0 || T == 0) continue;
    Eigen::MatrixXd score(G, T);
    for (Eigen::Index g = 0; g < G; ++g)
      for (Eigen::Index t = 0; t < T; ++t)
        score(g, t) = alignment(gtIndex.at(f.groundTruth[static_cast<std::size_t>(g)].gtId),
                                trIndex.at(f.estimates[static_cast<std::size_t>(t)].trackId)) *
                      s(g, t);
    const auto match = detail::maxScoreMatching(score);
    for (Eigen::Index g = 0; g < G; ++g) {
      const int t = match[static_cast<std::size_t>(g)];
      if (t < 0) continue;
      const double sv = s(g, t);
      const int gi = gtIndex.at(f.groundTruth[static_cast<std::size_t>(g)].gtId);
      const int ti = trIndex.at(f.estimates[static_cast<std::size_t>(t)].trackId);
      for (std::size_t a = 0; a < nA; ++a)
        if (sv >= cfg.alphaGrid[a] - kEps && sv > 0) {
          ++tp[a];
          locSum[a] += sv;
          matches[a](gi, ti) += 1;
        }
    }
  }

  HotaResult res;
  for (std::size_t a = 0; a < nA; ++a) {
    HotaAlpha h;
    h.alpha = cfg.alphaGrid[a];
    h.tp = tp[a];
    h.fn = totalGt - tp[a];
    h.fp = totalTr - tp[a];
    double assSum = 0.0;
    for (Eigen::Index g = 0; g < nG; ++g)
      for (Eigen::Index t = 0; t < nT; ++t) {
        const double m = matches[a](g, t);
        if (m > 0) assSum += m * m / (gtCount(g) + trCount(t) - m);
      }
    h.assA = assSum / std::max<double>(1.0, static_cast<double>(h.tp));
    h.detA = static_cast<double>(h.tp) / std::max<double>(1.0, static_cast<double>(h.tp + h.fn + h.fp));
    h.locA = std::max(kEps, locSum[a]) / std::max(kEps, static_cast<double>(h.tp));
    h.hota = std::sqrt(h.detA * h.assA);
    res.hota += h.hota;
    res.detA += h.detA;
    res.assA += h.assA;
    res.locA += h.locA;
    res.perAlpha.push_back(h);
  }
  const double n = static_cast<double>(nA);
  res.hota /= n;
  res.detA /= n;
  res.assA /= n;
  res.locA /= n;
  return res;
}

struct AgnosticCounts {
  std::int64_t tp = 0, fn = 0;
};

/// Class-blind matching: an estimate within `radius` of a ground truth can
/// be its TP; the matching minimises total distance per frame.
inline AgnosticCounts classAgnosticCounts(std::span<const TrackRecord> records, std::span<const Frame> frames,
                                          double radius = 2.0) {
  if (!(radius > 0)) throw Error(ErrorCode::InvalidArgument, "radius must be > 0");
  MetricsConfig cfg;
  cfg.classAgnostic = true;
  AgnosticCounts out;
  for (const auto& f : alignFrames(records, frames, cfg)) {
    const auto G = static_cast<Eigen::Index>(f.groundTruth.size());
    const auto T = static_cast<Eigen::Index>(f.estimates.size());
    Eigen::MatrixXd score = Eigen::MatrixXd::Constant(G, T, kForbidden);
    for (Eigen::Index g = 0; g < G; ++g)
      for (Eigen::Index t = 0; t < T; ++t) {
        const double d = bevDistance(f.estimates[static_cast<std::size_t>(t)].box, f.groundTruth[static_cast<std::size_t>(g)].box);
        if (d <= radius) score(g, t) = 2.0 * radius - d;  // positive, larger when closer
      }
    for (int m : detail::maxScoreMatching(score)) (m >= 0 ? out.tp : out.fn) += 1;
  }
  return out;
}

struct FpsResult {
  double meanFps = 0.0;
  std::vector<double> latencyMs;  ///< per frame, all repetitions
  double p50Ms = 0.0, p95Ms = 0.0, maxMs = 0.0;
};

inline double fpsFromElapsed(std::size_t frames, double seconds) {
  return seconds > 0 ? static_cast<double>(frames) / seconds : 0.0;
}

/// Times only `tracker.step(frame)`; a fresh tracker from `makeTracker` is
/// used for each repetition.
template <typename MakeTracker>
FpsResult fpsBenchmark(MakeTracker&& makeTracker, std::span<const Frame> frames, int repetitions = 1) {
  if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "fpsBenchmark needs at least one frame");
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be >= 1");
  using Clock = std::chrono::steady_clock;
  FpsResult res;
  double total = 0.0;
  for (int rep = 0; rep < repetitions; ++rep) {
    auto tracker = makeTracker();
    for (const auto& f : frames) {
      const auto t0 = Clock::now();
      auto out = tracker.step(f);
      const auto t1 = Clock::now();
      (void)out;
      const double sec = std::chrono::duration<double>(t1 - t0).count();
      total += sec;
      res.latencyMs.push_back(1e3 * sec);
    }
  }
  res.meanFps = fpsFromElapsed(frames.size() * static_cast<std::size_t>(repetitions), total);
  auto sorted = res.latencyMs;
  std::sort(sorted.begin(), sorted.end());
  const auto q = [&](double p) { return sorted[static_cast<std::size_t>(p * static_cast<double>(sorted.size() - 1))]; };
  res.p50Ms = q(0.5);
  res.p95Ms = q(0.95);
  res.maxMs = sorted.back();
  return res;
}

/// Bucket counts of `latencyMs` with the given bucket width.
inline std::vector<std::int64_t> latencyHistogram(std::span<const double> latencyMs, double bucketMs) {
  std::vector<std::int64_t> h;
  for (double l : latencyMs) {
    const auto b = static_cast<std::size_t>(std::max(0.0, l) / bucketMs);
    if (b >= h.size()) h.resize(b + 1, 0);
    ++h[b];
  }
  return h;
}

struct SizeHistogram {
  double binWidth = 0.25;
  std::vector<std::int64_t> width;   ///< bin b covers [b*binWidth, (b+1)*binWidth)
  std::vector<std::int64_t> length;
  std::int64_t total = 0;            ///< equals the CLEAR TP count
};

/// Width and length histograms of the estimated boxes that CLEAR matching at
/// `cfg.alphaClear` counts as true positives.
inline SizeHistogram tpSizeHistogram(std::span<const TrackRecord> records, std::span<const Frame> frames,
                                     const MetricsConfig& cfg, double binWidth = 0.25) {
  if (!(binWidth > 0)) throw Error(ErrorCode::InvalidArgument, "binWidth must be > 0");
  SizeHistogram h;
  h.binWidth = binWidth;
  const auto add = [&](std::vector<std::int64_t>& bins, double v) {
    const auto b = static_cast<std::size_t>(std::floor(std::max(0.0, v) / binWidth));
    if (b >= bins.size()) bins.resize(b + 1, 0);
    ++bins[b];
  };
  clearMetricsVisit(records, frames, cfg.alphaClear, cfg, [&](const TrackRecord& r, const GroundTruthObject&) {
    add(h.width, r.box.width);
    add(h.length, r.box.length);
    ++h.total;
  });
  return h;
}

}  // namespace radmot
