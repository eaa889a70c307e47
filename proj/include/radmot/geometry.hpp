#pragma once

// BEV geometry helpers: rotated rectangles, point containment, IoU and
// 2D pose composition.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "radmot/core.hpp"

namespace radmot {

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  [[nodiscard]] Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {c * p.x() - s * p.y() + x, s * p.x() + c * p.y() + y};
  }
  /// this ∘ other: first apply `other`, then `this`.
  [[nodiscard]] Pose2D compose(const Pose2D& other) const {
    const Eigen::Vector2d t = apply({other.x, other.y});
    return {t.x(), t.y(), normalizeYaw(yaw + other.yaw)};
  }
  [[nodiscard]] Pose2D inverse() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {-(c * x + s * y), -(-s * x + c * y), normalizeYaw(-yaw)};
  }
};

inline Eigen::Vector2d bevCenter(const Box3D& b) { return {b.cx, b.cy}; }

/// Corners in counter-clockwise order.
inline std::array<Eigen::Vector2d, 4> bevCorners(const Box3D& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double hl = 0.5 * b.length, hw = 0.5 * b.width;
  const Eigen::Vector2d ax(c * hl, s * hl);
  const Eigen::Vector2d ay(-s * hw, c * hw);
  const Eigen::Vector2d ctr = bevCenter(b);
  return {ctr + ax + ay, ctr - ax + ay, ctr - ax - ay, ctr + ax - ay};
}

/// Inclusive containment of a BEV point in the yaw-rotated rectangle.
inline bool pointInRotatedBox(const Eigen::Vector2d& p, const Box3D& box, double tol = 1e-9) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const Eigen::Vector2d d = p - bevCenter(box);
  const double along = c * d.x() + s * d.y();
  const double across = -s * d.x() + c * d.y();
  return std::abs(along) <= 0.5 * box.length + tol && std::abs(across) <= 0.5 * box.width + tol;
}

inline bool pointInRotatedBox(const RadarPoint& p, const Box3D& box) {
  return pointInRotatedBox(Eigen::Vector2d(p.x, p.y), box);
}

namespace detail {

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

inline double polygonArea(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross2(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of `subject` against the convex CCW polygon `clip`.
inline std::vector<Eigen::Vector2d> clipConvex(std::vector<Eigen::Vector2d> subject,
                                               const std::array<Eigen::Vector2d, 4>& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Eigen::Vector2d a = clip[e];
    const Eigen::Vector2d b = clip[(e + 1) % clip.size()];
    const auto side = [&](const Eigen::Vector2d& p) { return cross2(b - a, p - a); };
    std::vector<Eigen::Vector2d> out;
    out.reserve(subject.size() + 4);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Eigen::Vector2d& cur = subject[i];
      const Eigen::Vector2d& nxt = subject[(i + 1) % subject.size()];
      const double sc = side(cur), sn = side(nxt);
      if (sc >= 0.0) out.push_back(cur);
      if ((sc >= 0.0) != (sn >= 0.0)) {
        const double t = sc / (sc - sn);
        out.push_back(cur + t * (nxt - cur));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

}  // namespace detail

inline double bevIntersectionArea(const Box3D& a, const Box3D& b) {
  const auto ca = bevCorners(a);
  const auto cb = bevCorners(b);
  const auto poly = detail::clipConvex({ca.begin(), ca.end()}, cb);
  return poly.size() < 3 ? 0.0 : detail::polygonArea(poly);
}

inline double bevIoU(const Box3D& a, const Box3D& b) {
  const double inter = bevIntersectionArea(a, b);
  const double uni = a.length * a.width + b.length * b.width - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

inline double bevDistance(const Box3D& a, const Box3D& b) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

}  // namespace radmot
