#pragma once

// Synthetic radar scenes: extended objects emitting Poisson point clouds,
// uniform and roadside clutter, and an emulated 3D box detector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "radmot/core.hpp"
#include "radmot/kinematics.hpp"

namespace radmot {

struct FieldOfView {
  double xMin = 0.0, xMax = 60.0;
  double yMin = -25.0, yMax = 25.0;
  [[nodiscard]] double area() const { return (xMax - xMin) * (yMax - yMin); }
  [[nodiscard]] bool contains(const Vector2& p) const {
    return p.x() >= xMin && p.x() <= xMax && p.y() >= yMin && p.y() <= yMax;
  }
};

/// From `frame` on, the object moves with `velocity`.
struct Waypoint {
  int frame = 0;
  Vector2 velocity = Vector2::Zero();
};

struct ScenarioObject {
  ObjectClass classLabel = ObjectClass::car;
  int birthFrame = 0;
  int deathFrame = -1;  ///< last live frame; -1 = until the end
  Vector2 position = Vector2::Zero();
  double yaw = 0.0;  ///< used while the object is (nearly) static
  Vector2 velocity = Vector2::Zero();
  Matrix2 extent = Matrix2::Identity();  ///< body frame, x along the heading
  double pointRate = 8.0;                ///< gamma
  double skewFactor = 0.0;
  double height = 1.5;
  std::vector<Waypoint> waypoints;
};

/// Body-frame extent whose 2-sigma ellipse spans a length x width box.
inline Matrix2 extentFromSize(double length, double width) {
  Matrix2 x = Matrix2::Zero();
  x(0, 0) = std::pow(length / 4.0, 2);
  x(1, 1) = std::pow(width / 4.0, 2);
  return x;
}

/// Persistent clutter source, e.g. a roadside pole or barrier segment.
struct StaticClutter {
  Vector2 position = Vector2::Zero();
  double pointRate = 2.0;
  double sigma = 0.3;
};

struct DetectorEmulation {
  double fnRate = 0.1;
  double fpRate = 0.1;  ///< expected false boxes per live object per frame
  double centerNoise = 0.2;
  double sizeNoise = 0.1;
  double yawNoise = 0.05;
  double tpScoreMin = 0.4, tpScoreMax = 1.0;
  double fpScoreMin = 0.1, fpScoreMax = 0.7;
};

struct ScenarioConfig {
  std::string name = "scenario";
  int duration = 200;
  double frameRate = 10.0;
  std::vector<ScenarioObject> objects;
  double clutterRate = 20.0;
  FieldOfView fieldOfView;
  std::vector<StaticClutter> staticClutter;
  Vector2 sensorPosition = Vector2::Zero();
  DetectorEmulation detector;
  std::uint64_t seed = 1;

  void validate() const {
    const auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, "scenario: " + what); };
    if (duration < 0) bad("duration must be >= 0");
    if (!(frameRate > 0)) bad("frameRate must be > 0");
    if (!(clutterRate >= 0)) bad("clutterRate must be >= 0");
    if (!(fieldOfView.xMax > fieldOfView.xMin && fieldOfView.yMax > fieldOfView.yMin)) bad("empty field of view");
    const auto& d = detector;
    if (!(d.fnRate >= 0 && d.fnRate <= 1)) bad("detector.fnRate must lie in [0,1]");
    if (!(d.fpRate >= 0)) bad("detector.fpRate must be >= 0");
    if (!(d.centerNoise >= 0 && d.sizeNoise >= 0 && d.yawNoise >= 0)) bad("detector noise must be >= 0");
    if (!(d.tpScoreMin <= d.tpScoreMax && d.fpScoreMin <= d.fpScoreMax)) bad("score ranges must be ordered");
    for (const auto& o : objects) {
      if (!(o.pointRate > 0)) bad("object pointRate must be > 0");
      if (!(o.skewFactor >= 0 && o.skewFactor <= 1)) bad("object skewFactor must lie in [0,1]");
      if (!(o.extent.determinant() > 0 && o.extent(0, 0) > 0)) bad("object extent must be SPD");
      if (o.deathFrame >= 0 && o.deathFrame < o.birthFrame) bad("object deathFrame precedes birthFrame");
    }
    for (const auto& s : staticClutter)
      if (!(s.pointRate >= 0 && s.sigma > 0)) bad("static clutter needs pointRate >= 0 and sigma > 0");
  }
};

/// Moves far-side points (relative to the sensor) through the object centre
/// with probability skewFactor, so the cloud gathers on the sensor-facing
/// half. The reflection keeps each point's Mahalanobis distance.
template <typename Rng>
std::vector<Vector2> skewPointDistribution(std::vector<Vector2> points, const Vector2& objectCenter,
                                           const Vector2& sensorPosition, double skewFactor, Rng& rng) {
  if (!(skewFactor >= 0 && skewFactor <= 1)) throw Error(ErrorCode::InvalidArgument, "skewFactor must lie in [0,1]");
  if (skewFactor == 0.0) return points;
  const Vector2 toSensor = sensorPosition - objectCenter;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& p : points)
    if ((p - objectCenter).dot(toSensor) < 0.0 && u(rng) < skewFactor) p = 2.0 * objectCenter - p;
  return points;
}

namespace detail {

struct ObjectState {
  Vector2 position;
  Vector2 velocity;
  double heading;
};

inline ObjectState objectStateAt(const ScenarioObject& o, int frame, double dt) {
  ObjectState s{o.position, o.velocity, o.yaw};
  std::vector<Waypoint> wps = o.waypoints;
  std::sort(wps.begin(), wps.end(), [](const Waypoint& a, const Waypoint& b) { return a.frame < b.frame; });
  std::size_t next = 0;
  for (int f = o.birthFrame; f < frame; ++f) {
    while (next < wps.size() && wps[next].frame <= f) s.velocity = wps[next++].velocity;
    s.position += dt * s.velocity;
  }
  while (next < wps.size() && wps[next].frame <= frame) s.velocity = wps[next++].velocity;
  if (s.velocity.norm() > 0.1) s.heading = std::atan2(s.velocity.y(), s.velocity.x());
  return s;
}

inline Matrix2 rotation(double yaw) {
  Matrix2 r;
  r << std::cos(yaw), -std::sin(yaw), std::sin(yaw), std::cos(yaw);
  return r;
}

inline Box3D boxFromExtent(const Vector2& c, double heading, const Matrix2& bodyExtent, double height) {
  const Eigen::SelfAdjointEigenSolver<Matrix2> es(bodyExtent);
  const Vector2 major = es.eigenvectors().col(1);
  Box3D b;
  b.cx = c.x();
  b.cy = c.y();
  b.cz = 0.5 * height;
  b.length = 4.0 * std::sqrt(es.eigenvalues()(1));
  b.width = 4.0 * std::sqrt(es.eigenvalues()(0));
  b.height = height;
  b.yaw = normalizeYaw(heading + std::atan2(major.y(), major.x()));
  return b;
}

inline Box3D typicalBox(ObjectClass c) {
  switch (c) {
    case ObjectClass::car: return {0, 0, 0.75, 4.5, 1.8, 1.5, 0};
    case ObjectClass::pedestrian: return {0, 0, 0.85, 0.6, 0.6, 1.7, 0};
    case ObjectClass::cyclist: return {0, 0, 0.8, 1.8, 0.7, 1.6, 0};
    default: return {0, 0, 0.5, 1.0, 1.0, 1.0, 0};
  }
}

}  // namespace detail

/// Deterministic given cfg.seed.
inline std::vector<Frame> simulate(const ScenarioConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto poisson = [&](double mean) { return mean > 0 ? std::poisson_distribution<int>(mean)(rng) : 0; };
  const auto uniformIn = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double dt = 1.0 / cfg.frameRate;
  const auto& fov = cfg.fieldOfView;
  const auto& det = cfg.detector;

  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(cfg.duration));
  for (int f = 0; f < cfg.duration; ++f) {
    Frame fr;
    fr.seqId = cfg.name;
    fr.frameIdx = f;
    fr.timestamp = f * dt;
    int live = 0;
    for (std::size_t k = 0; k < cfg.objects.size(); ++k) {
      const auto& o = cfg.objects[k];
      if (f < o.birthFrame || (o.deathFrame >= 0 && f > o.deathFrame)) continue;
      ++live;
      const auto st = detail::objectStateAt(o, f, dt);
      const Matrix2 R = detail::rotation(st.heading);
      const Matrix2 X = R * o.extent * R.transpose();
      const Eigen::LLT<Matrix2> llt(X);

      GroundTruthObject gt;
      gt.gtId = static_cast<std::int64_t>(k) + 1;
      gt.classLabel = o.classLabel;
      gt.box = detail::boxFromExtent(st.position, st.heading, o.extent, o.height);
      fr.groundTruth.push_back(gt);

      std::vector<Vector2> pts;
      for (int n = poisson(o.pointRate); n > 0; --n) {
        Vector2 w;
        do w = {gauss(rng), gauss(rng)};
        while (w.squaredNorm() > 16.0);
        pts.push_back(st.position + llt.matrixL() * w);
      }
      pts = skewPointDistribution(std::move(pts), st.position, cfg.sensorPosition, o.skewFactor, rng);
      for (const auto& p : pts) {
        RadarPoint rp;
        rp.x = p.x();
        rp.y = p.y();
        rp.z = gt.box.cz + 0.2 * gauss(rng);
        const Vector2 los = p - cfg.sensorPosition;
        rp.vr = los.norm() > 0 ? st.velocity.dot(los.normalized()) : 0.0;
        fr.points.push_back(rp);
      }

      if (unit(rng) >= det.fnRate) {
        Detection d;
        d.classLabel = o.classLabel;
        d.box = gt.box;
        d.box.cx += det.centerNoise * gauss(rng);
        d.box.cy += det.centerNoise * gauss(rng);
        d.box.length = std::max(0.1, d.box.length + det.sizeNoise * gauss(rng));
        d.box.width = std::max(0.1, d.box.width + det.sizeNoise * gauss(rng));
        d.box.yaw = normalizeYaw(d.box.yaw + det.yawNoise * gauss(rng));
        d.score = uniformIn(det.tpScoreMin, det.tpScoreMax);
        fr.detections.push_back(d);
      }
    }

    for (int n = poisson(cfg.clutterRate); n > 0; --n) {
      RadarPoint rp;
      rp.x = uniformIn(fov.xMin, fov.xMax);
      rp.y = uniformIn(fov.yMin, fov.yMax);
      rp.z = uniformIn(-0.5, 2.5);
      rp.vr = uniformIn(-5.0, 5.0);
      fr.points.push_back(rp);
    }
    for (const auto& s : cfg.staticClutter)
      for (int n = poisson(s.pointRate); n > 0; --n) {
        RadarPoint rp;
        rp.x = s.position.x() + s.sigma * gauss(rng);
        rp.y = s.position.y() + s.sigma * gauss(rng);
        rp.z = uniformIn(0.0, 1.5);
        rp.vr = 0.0;
        fr.points.push_back(rp);
      }

    for (int n = poisson(det.fpRate * live); n > 0; --n) {
      Detection d;
      d.classLabel = kAllClasses[static_cast<std::size_t>(unit(rng) * 3.0) % 3];
      d.box = detail::typicalBox(d.classLabel);
      d.box.cx = uniformIn(fov.xMin, fov.xMax);
      d.box.cy = uniformIn(fov.yMin, fov.yMax);
      d.box.yaw = uniformIn(-std::numbers::pi, std::numbers::pi);
      d.score = uniformIn(det.fpScoreMin, det.fpScoreMax);
      fr.detections.push_back(d);
    }
    frames.push_back(std::move(fr));
  }
  return frames;
}

/// Three road users crossing the field of view in front of a static sensor.
inline ScenarioConfig defaultScenario(std::uint64_t seed = 1) {
  ScenarioConfig cfg;
  cfg.name = "default";
  cfg.seed = seed;
  ScenarioObject car;
  car.classLabel = ObjectClass::car;
  car.position = {8.0, 4.0};
  car.velocity = {2.0, 0.0};
  car.extent = extentFromSize(4.5, 1.8);
  car.pointRate = 12.0;
  ScenarioObject ped;
  ped.classLabel = ObjectClass::pedestrian;
  ped.position = {20.0, -12.0};
  ped.velocity = {0.0, 1.0};
  ped.extent = extentFromSize(0.6, 0.6);
  ped.pointRate = 6.0;
  ped.height = 1.7;
  ScenarioObject bike;
  bike.classLabel = ObjectClass::cyclist;
  bike.position = {45.0, -6.0};
  bike.velocity = {-1.5, 0.0};
  bike.extent = extentFromSize(1.8, 0.7);
  bike.pointRate = 8.0;
  bike.height = 1.6;
  cfg.objects = {car, ped, bike};
  return cfg;
}

/// Adds persistent clutter strips along both lateral edges of the field of view.
inline ScenarioConfig roadsidePreset(ScenarioConfig cfg, double spacing = 6.0, double pointRate = 4.0) {
  cfg.name += "-roadside";
  const auto& fov = cfg.fieldOfView;
  for (double x = fov.xMin + 0.5 * spacing; x < fov.xMax; x += spacing)
    for (double y : {fov.yMin + 1.5, fov.yMax - 1.5}) cfg.staticClutter.push_back({{x, y}, pointRate, 0.3});
  return cfg;
}

inline ScenarioConfig denseClutterPreset(ScenarioConfig cfg, double clutterRate = 150.0) {
  cfg.name += "-dense";
  cfg.clutterRate = clutterRate;
  return cfg;
}

}  // namespace radmot
