#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// being checked; each helper is a direct enumeration or a closed form.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <tuple>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace radmot::oracle {

struct Enumerated {
  std::vector<int> rowToCol;
  double total;
};

/// Every injective row->column map with finite total, sorted by (total, rowToCol).
inline std::vector<Enumerated> enumerateAssignments(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  const int m = static_cast<int>(c.cols());
  std::vector<Enumerated> out;
  std::vector<int> cur(static_cast<std::size_t>(n));
  std::vector<char> used(static_cast<std::size_t>(m), 0);
  std::function<void(int, double)> rec = [&](int row, double acc) {
    if (row == n) {
      out.push_back({cur, acc});
      return;
    }
    for (int j = 0; j < m; ++j) {
      if (used[j] || !std::isfinite(c(row, j))) continue;
      used[j] = 1;
      cur[row] = j;
      rec(row + 1, acc + c(row, j));
      used[j] = 0;
    }
  };
  rec(0, 0.0);
  std::sort(out.begin(), out.end(), [](const Enumerated& a, const Enumerated& b) {
    if (a.total != b.total) return a.total < b.total;
    return a.rowToCol < b.rowToCol;
  });
  return out;
}

inline Eigen::MatrixXd randomIntMatrix(std::mt19937_64& rng, int rows, int cols, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

inline double lgammaMulti2(double x) {
  // log of the bivariate gamma function Gamma_2(x) = sqrt(pi) Gamma(x) Gamma(x - 1/2)
  return 0.5 * std::log(M_PI) + std::lgamma(x) + std::lgamma(x - 0.5);
}

/// Plain single-object GGIW state for the reference recursion below.
struct Ggiw {
  double a = 0, b = 0;
  Eigen::Vector4d m = Eigen::Vector4d::Zero();
  Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
  double v = 0;
  Eigen::Matrix2d V = Eigen::Matrix2d::Identity();
};

/// Principal square root of a 2x2 SPD matrix: (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
inline Eigen::Matrix2d sqrt2(const Eigen::Matrix2d& M) {
  const double s = std::sqrt(M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0));
  const double t = std::sqrt(M(0, 0) + M(1, 1) + 2 * s);
  return (M + s * Eigen::Matrix2d::Identity()) / t;
}

inline double det2(const Eigen::Matrix2d& M) { return M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0); }

inline Ggiw ggiwPredict(Ggiw g, double dt, double eta, double tau, double q) {
  g.a /= eta;
  g.b /= eta;
  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = F(1, 3) = dt;
  Eigen::Matrix2d blk;
  blk << dt * dt * dt * dt / 4, dt * dt * dt / 2, dt * dt * dt / 2, dt * dt;
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  for (int axis = 0; axis < 2; ++axis)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) Q(axis + 2 * r, axis + 2 * c) = q * blk(r, c);
  g.m = F * g.m;
  g.P = F * g.P * F.transpose() + Q;
  g.P = 0.5 * (g.P + g.P.transpose()).eval();
  const double f = std::exp(-dt / tau);
  g.v = 6 + f * (g.v - 6);
  g.V = f * g.V;
  return g;
}

struct GgiwStep {
  Ggiw posterior;
  double logLikelihood = 0;
};

/// Conjugate update with a raw point set (centroid and scatter formed here).
inline GgiwStep ggiwUpdate(const Ggiw& g, const std::vector<Eigen::Vector2d>& pts) {
  const double n = static_cast<double>(pts.size());
  Eigen::Vector2d zbar = Eigen::Vector2d::Zero();
  for (const auto& z : pts) zbar += z;
  zbar /= n;
  Eigen::Matrix2d Z = Eigen::Matrix2d::Zero();
  for (const auto& z : pts) Z += (z - zbar) * (z - zbar).transpose();

  const Eigen::Matrix2d Xhat = g.V / (g.v - 6);
  const Eigen::Matrix2d S = g.P.topLeftCorner<2, 2>() + Xhat / n;
  const Eigen::Matrix<double, 4, 2> K = g.P.leftCols<2>() * S.inverse();
  const Eigen::Vector2d eps = zbar - g.m.head<2>();
  const Eigen::Matrix2d A = sqrt2(Xhat) * sqrt2(S).inverse();
  const Eigen::Matrix2d N = A * eps * eps.transpose() * A.transpose();

  GgiwStep out;
  Ggiw& p = out.posterior;
  p.a = g.a + n;
  p.b = g.b + 1;
  p.m = g.m + K * eps;
  p.P = g.P - K * S * K.transpose();
  p.v = g.v + n;
  p.V = g.V + N + Z;
  const double logSpatial = -n * std::log(M_PI) - std::log(n) + 0.5 * std::log(det2(Xhat)) - 0.5 * std::log(det2(S)) +
                            0.5 * (g.v - 3) * std::log(det2(g.V)) - 0.5 * (p.v - 3) * std::log(det2(p.V)) +
                            lgammaMulti2(0.5 * (p.v - 3)) - lgammaMulti2(0.5 * (g.v - 3));
  const double logCount = std::lgamma(g.a + n) - std::lgamma(g.a) + g.a * std::log(g.b) - (g.a + n) * std::log(g.b + 1);
  out.logLikelihood = logSpatial + logCount;
  return out;
}

/// log of D * Pdm * p(W) for a newborn under uniform intensity D and an IW(v0, (v0-6) X0) extent prior.
inline double logBirth(const std::vector<Eigen::Vector2d>& pts, double D, double pdm, double a0, double b0, double v0,
                       const Eigen::Matrix2d& X0) {
  const double n = static_cast<double>(pts.size());
  Eigen::Vector2d zbar = Eigen::Vector2d::Zero();
  for (const auto& z : pts) zbar += z;
  zbar /= n;
  Eigen::Matrix2d Z = Eigen::Matrix2d::Zero();
  for (const auto& z : pts) Z += (z - zbar) * (z - zbar).transpose();
  const Eigen::Matrix2d V0 = (v0 - 6) * X0;
  const double v1 = v0 + n - 1;
  const double logSpatial = -(n - 1) * std::log(M_PI) - std::log(n) + 0.5 * (v0 - 3) * std::log(det2(V0)) -
                            0.5 * (v1 - 3) * std::log(det2(V0 + Z)) + lgammaMulti2(0.5 * (v1 - 3)) -
                            lgammaMulti2(0.5 * (v0 - 3));
  const double logCount = std::lgamma(a0 + n) - std::lgamma(a0) + a0 * std::log(b0) - (a0 + n) * std::log(b0 + 1);
  return std::log(D) + std::log(pdm) + logCount + logSpatial;
}

/// P(N >= 1) for N ~ Poisson(g), g ~ Gamma(a, b), by composite Simpson quadrature over g.
inline double poissonGammaAtLeastOne(double a, double b, int intervals = 200000) {
  const double mean = a / b, sd = std::sqrt(a) / b;
  const double lo = std::max(0.0, mean - 40 * sd), hi = mean + 60 * sd;
  const double h = (hi - lo) / intervals;
  const auto f = [&](double g) {
    if (g <= 0) return 0.0;
    const double logPdf = a * std::log(b) - std::lgamma(a) + (a - 1) * std::log(g) - b * g;
    return std::exp(logPdf) * (1 - std::exp(-g));
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) s += f(lo + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

struct ToyObject {
  long id;
  Eigen::Vector2d pos;
};

struct ToyFrame {
  std::vector<ToyObject> gt;
  std::vector<ToyObject> tr;
};

struct ToyHota {
  double hota = 0, detA = 0, assA = 0, locA = 0;
};

/// HOTA straight from its definition. Each frame's matching is found by
/// enumerating every partial one-to-one matching; TPA/FNA/FPA are counted
/// explicitly for every true positive.
inline ToyHota bruteForceHota(const std::vector<ToyFrame>& frames, const std::vector<double>& alphas, double d0) {
  const auto sim = [&](const ToyObject& g, const ToyObject& t) { return std::max(0.0, 1 - (g.pos - t.pos).norm() / d0); };
  std::map<std::pair<long, long>, double> potential;
  std::map<long, double> gtCount, trCount;
  for (const auto& f : frames) {
    for (const auto& g : f.gt) gtCount[g.id] += 1;
    for (const auto& t : f.tr) trCount[t.id] += 1;
    for (const auto& g : f.gt)
      for (const auto& t : f.tr) {
        double rowSum = 0, colSum = 0;
        for (const auto& t2 : f.tr) rowSum += sim(g, t2);
        for (const auto& g2 : f.gt) colSum += sim(g2, t);
        const double denom = rowSum + colSum - sim(g, t);
        if (denom > 1e-10) potential[{g.id, t.id}] += sim(g, t) / denom;
      }
  }
  const auto align = [&](long g, long t) {
    const double p = potential.count({g, t}) ? potential.at({g, t}) : 0.0;
    return p / (gtCount[g] + trCount[t] - p);
  };
  // Best matching per frame: tr index per gt (-1 unmatched).
  std::vector<std::vector<int>> best(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    std::vector<int> cur(f.gt.size(), -1);
    std::vector<char> used(f.tr.size(), 0);
    double bestScore = -1;
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
      if (i == f.gt.size()) {
        if (acc > bestScore + 1e-15) {
          bestScore = acc;
          best[k] = cur;
        }
        return;
      }
      cur[i] = -1;
      rec(i + 1, acc);
      for (std::size_t j = 0; j < f.tr.size(); ++j) {
        if (used[j]) continue;
        used[j] = 1;
        cur[i] = static_cast<int>(j);
        rec(i + 1, acc + align(f.gt[i].id, f.tr[j].id) * sim(f.gt[i], f.tr[j]));
        used[j] = 0;
      }
      cur[i] = -1;
    };
    rec(0, 0.0);
  }
  ToyHota out;
  for (double alpha : alphas) {
    std::vector<std::tuple<long, long, double>> tps;  // (gt id, tr id, similarity)
    double nGt = 0, nTr = 0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto& f = frames[k];
      nGt += static_cast<double>(f.gt.size());
      nTr += static_cast<double>(f.tr.size());
      for (std::size_t i = 0; i < f.gt.size(); ++i) {
        const int j = best[k][i];
        if (j < 0) continue;
        const double s = sim(f.gt[i], f.tr[static_cast<std::size_t>(j)]);
        if (s >= alpha - 1e-10) tps.emplace_back(f.gt[i].id, f.tr[static_cast<std::size_t>(j)].id, s);
      }
    }
    const double tp = static_cast<double>(tps.size());
    const double detA = tp / std::max(1.0, nGt + nTr - tp);
    double assSum = 0, locSum = 0;
    for (const auto& [g, t, s] : tps) {
      double tpa = 0;
      for (const auto& [g2, t2, s2] : tps) tpa += (g2 == g && t2 == t);
      const double fna = gtCount[g] - tpa;  // gt g detections not matched to t
      const double fpa = trCount[t] - tpa;  // tr t detections not matched to g
      assSum += tpa / (tpa + fna + fpa);
      locSum += s;
    }
    const double assA = tps.empty() ? 0.0 : assSum / tp;
    const double locA = tps.empty() ? 1.0 : locSum / tp;
    out.hota += std::sqrt(detA * assA);
    out.detA += detA;
    out.assA += assA;
    out.locA += locA;
  }
  const double n = static_cast<double>(alphas.size());
  out.hota /= n;
  out.detA /= n;
  out.assA /= n;
  out.locA /= n;
  return out;
}

}  // namespace radmot::oracle
