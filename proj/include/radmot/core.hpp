#pragma once

// Domain types shared by the trackers, the scenario simulator and the metrics.
// Tracking and evaluation happen on the BEV plane (x, y, yaw, length, width);
// z and height are carried through untouched.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace radmot {

enum class ErrorCode {
  InvalidArgument,
  Infeasible,
  NonPositiveDt,
  TooFewPoints,
  InvalidPartition,
  DegenerateExtent,
  MissingDetections,
  MissingPoints,
  InvalidConfig,
  IoError,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::DegenerateExtent: return "DegenerateExtent";
    case ErrorCode::MissingDetections: return "MissingDetections";
    case ErrorCode::MissingPoints: return "MissingPoints";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class ObjectClass : std::uint8_t { car = 0, pedestrian = 1, cyclist = 2, other = 3 };

inline constexpr std::size_t kNumClasses = 4;
inline constexpr ObjectClass kAllClasses[kNumClasses] = {
    ObjectClass::car, ObjectClass::pedestrian, ObjectClass::cyclist, ObjectClass::other};

inline std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::car: return "car";
    case ObjectClass::pedestrian: return "pedestrian";
    case ObjectClass::cyclist: return "cyclist";
    case ObjectClass::other: return "other";
  }
  return "other";
}

inline ObjectClass parseObjectClass(std::string_view s) {
  for (auto c : kAllClasses)
    if (to_string(c) == s) return c;
  throw Error(ErrorCode::ParseError, "unknown object class '" + std::string(s) + "'");
}

inline std::size_t classIndex(ObjectClass c) { return static_cast<std::size_t>(c); }

/// Maps any finite angle into [-pi, pi). Idempotent.
inline double normalizeYaw(double yaw) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(yaw + std::numbers::pi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  if (r >= std::numbers::pi) r -= kTwoPi;
  return r;
}

struct RadarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double vr = 0.0;  ///< radial velocity, m/s
  std::optional<double> rcs;  ///< dB

  [[nodiscard]] bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(vr);
  }
  friend bool operator==(const RadarPoint&, const RadarPoint&) = default;
};

struct Box3D {
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  double yaw = 0.0;

  [[nodiscard]] bool valid() const {
    return length > 0.0 && width > 0.0 && height > 0.0 && std::isfinite(cx) &&
           std::isfinite(cy) && std::isfinite(cz) && std::isfinite(yaw);
  }
  friend bool operator==(const Box3D&, const Box3D&) = default;
};

struct Detection {
  Box3D box;
  ObjectClass classLabel = ObjectClass::other;
  double score = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruthObject {
  std::int64_t gtId = 0;
  Box3D box;
  ObjectClass classLabel = ObjectClass::other;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

/// Ego pose and velocity in the world frame.
struct EgoInfo {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  friend bool operator==(const EgoInfo&, const EgoInfo&) = default;
};

struct Frame {
  std::string seqId;
  std::int64_t frameIdx = 0;
  double timestamp = 0.0;
  std::vector<RadarPoint> points;
  std::vector<Detection> detections;
  std::vector<GroundTruthObject> groundTruth;
  std::optional<EgoInfo> egoInfo;
  // Whether the source provides the channel at all; an empty list with the
  // flag set is a scan with nothing in it.
  bool hasPoints = true;
  bool hasDetections = true;

  friend bool operator==(const Frame&, const Frame&) = default;
};

using TrackId = std::int64_t;

struct TrackRecord {
  TrackId trackId = 0;
  std::int64_t frameIdx = 0;
  Box3D box;
  ObjectClass classLabel = ObjectClass::other;
  double existence = 1.0;

  friend bool operator==(const TrackRecord&, const TrackRecord&) = default;
};

/// Checks the per-sequence invariants: strictly increasing frame indices,
/// non-decreasing timestamps, valid boxes and points, unique GT ids per frame.
inline void validateSequence(const std::vector<Frame>& frames) {
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = frames[k];
    if (f.frameIdx < 0) throw Error(ErrorCode::InvalidArgument, "negative frame index");
    if (k > 0) {
      if (f.frameIdx <= frames[k - 1].frameIdx)
        throw Error(ErrorCode::InvalidArgument,
                    "frame indices not strictly increasing at frame " + std::to_string(f.frameIdx));
      if (f.timestamp < frames[k - 1].timestamp)
        throw Error(ErrorCode::InvalidArgument,
                    "timestamps decrease at frame " + std::to_string(f.frameIdx));
    }
    for (const auto& p : f.points)
      if (!p.valid()) throw Error(ErrorCode::InvalidArgument, "non-finite radar point");
    for (const auto& d : f.detections) {
      if (!d.box.valid()) throw Error(ErrorCode::InvalidArgument, "invalid detection box");
      if (!(d.score >= 0.0 && d.score <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "detection score outside [0, 1]");
    }
    for (std::size_t i = 0; i < f.groundTruth.size(); ++i) {
      if (!f.groundTruth[i].box.valid())
        throw Error(ErrorCode::InvalidArgument, "invalid ground-truth box");
      for (std::size_t j = i + 1; j < f.groundTruth.size(); ++j)
        if (f.groundTruth[i].gtId == f.groundTruth[j].gtId)
          throw Error(ErrorCode::InvalidArgument, "duplicate gtId within a frame");
    }
  }
}

}  // namespace radmot
