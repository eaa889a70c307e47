#pragma once

// Constant-velocity kinematics on the BEV plane. State is [x, y, vx, vy].

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace radmot {

using Vector2 = Eigen::Vector2d;
using Vector4 = Eigen::Vector4d;
using Matrix2 = Eigen::Matrix2d;
using Matrix4 = Eigen::Matrix4d;
using Matrix24 = Eigen::Matrix<double, 2, 4>;

struct KinematicGaussian {
  Vector4 mean = Vector4::Zero();
  Matrix4 covariance = Matrix4::Identity();

  [[nodiscard]] Vector2 position() const { return mean.head<2>(); }
  [[nodiscard]] Vector2 velocity() const { return mean.tail<2>(); }

  [[nodiscard]] bool valid(double symTol = 1e-9) const {
    if (!mean.allFinite() || !covariance.allFinite()) return false;
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > symTol) return false;
    Eigen::SelfAdjointEigenSolver<Matrix4> es(covariance, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > 0.0;
  }
};

inline Matrix24 positionSelector() {
  Matrix24 h = Matrix24::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return h;
}

inline Matrix4 cvTransition(double dt) {
  Matrix4 f = Matrix4::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  return f;
}

/// Piecewise-constant white acceleration with intensity q (m^2/s^4).
inline Matrix4 cvProcessNoise(double dt, double q) {
  const double dt2 = dt * dt;
  const double a = 0.25 * dt2 * dt2, b = 0.5 * dt2 * dt, c = dt2;
  Matrix4 Q = Matrix4::Zero();
  Q(0, 0) = Q(1, 1) = a;
  Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = b;
  Q(2, 2) = Q(3, 3) = c;
  return q * Q;
}

template <typename Derived>
typename Derived::PlainObject symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m + m.transpose());
}

inline KinematicGaussian predictConstantVelocity(const KinematicGaussian& g, double dt, double q) {
  const Matrix4 F = cvTransition(dt);
  return {F * g.mean, symmetrize(F * g.covariance * F.transpose() + cvProcessNoise(dt, q))};
}

/// log N(x; 0, S) for 2D x.
inline double logGaussian2(const Vector2& x, const Matrix2& S) {
  const Eigen::LLT<Matrix2> llt(S);
  const Vector2 w = llt.matrixL().solve(x);
  const double logDet = 2.0 * std::log(llt.matrixL()(0, 0) * llt.matrixL()(1, 1));
  return -std::log(2.0 * std::numbers::pi) - 0.5 * logDet - 0.5 * w.squaredNorm();
}

struct PositionUpdate {
  KinematicGaussian posterior;
  Vector2 innovation;
  Matrix2 innovationCov;
  double mahalanobis2 = 0.0;
  double logLikelihood = 0.0;
};

/// Kalman update with a BEV position measurement z ~ N(Hx, R). Joseph form.
inline PositionUpdate kalmanPositionUpdate(const KinematicGaussian& g, const Vector2& z,
                                           const Matrix2& R) {
  const Matrix24 H = positionSelector();
  PositionUpdate u;
  u.innovation = z - H * g.mean;
  u.innovationCov = symmetrize(Matrix2(H * g.covariance * H.transpose() + R));
  const Eigen::LLT<Matrix2> llt(u.innovationCov);
  const Eigen::Matrix<double, 4, 2> K =
      llt.solve(H * g.covariance).transpose();  // P H^T S^-1 (S symmetric)
  const Matrix4 IKH = Matrix4::Identity() - K * H;
  u.posterior.mean = g.mean + K * u.innovation;
  u.posterior.covariance =
      symmetrize(Matrix4(IKH * g.covariance * IKH.transpose() + K * R * K.transpose()));
  u.mahalanobis2 = u.innovation.dot(llt.solve(u.innovation));
  u.logLikelihood = logGaussian2(u.innovation, u.innovationCov);
  return u;
}

/// log(sum(exp(x))) over a range.
template <typename Range>
double logSumExp(const Range& xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

/// 0.99 quantile of the chi-square distribution with 2 degrees of freedom.
inline constexpr double kChi2Gate2Dof99 = 9.21034037197618;

}  // namespace radmot
