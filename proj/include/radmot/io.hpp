#pragma once

// File formats. Frames and tracks are JSON Lines, one self-describing record
// per line with a "schema" field; configs and scenarios are JSON documents.
// Field names and units are listed in docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "radmot/core.hpp"
#include "radmot/metrics.hpp"
#include "radmot/pipelines.hpp"
#include "radmot/scenario.hpp"

namespace radmot {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolkitVersion = "0.1.0";
inline constexpr std::string_view kFramesSchema = "radmot.frames/1";
inline constexpr std::string_view kTracksSchema = "radmot.tracks/1";
inline constexpr std::string_view kConfigSchema = "radmot.config/1";
inline constexpr std::string_view kScenarioSchema = "radmot.scenario/1";
inline constexpr std::string_view kManifestSchema = "radmot.manifest/1";

namespace detail {

[[noreturn]] inline void parseFail(std::string_view source, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << source << ":" << line << ": " << what;
  throw Error(ErrorCode::ParseError, os.str());
}

inline void putBox(Json& j, const Box3D& b) {
  j["cx"] = b.cx;
  j["cy"] = b.cy;
  j["cz"] = b.cz;
  j["length"] = b.length;
  j["width"] = b.width;
  j["height"] = b.height;
  j["yaw"] = b.yaw;
}

inline Box3D getBox(const Json& j) {
  Box3D b;
  b.cx = j.at("cx").get<double>();
  b.cy = j.at("cy").get<double>();
  b.cz = j.at("cz").get<double>();
  b.length = j.at("length").get<double>();
  b.width = j.at("width").get<double>();
  b.height = j.at("height").get<double>();
  b.yaw = j.at("yaw").get<double>();
  return b;
}

inline void checkSchema(const Json& j, std::string_view expected) {
  const auto it = j.find("schema");
  if (it == j.end() || !it->is_string()) throw Error(ErrorCode::ParseError, "record has no schema field");
  if (it->get<std::string>() != expected)
    throw Error(ErrorCode::ParseError,
                "schema '" + it->get<std::string>() + "' is not '" + std::string(expected) + "'");
}

inline std::ifstream openIn(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + p.string() + "' for reading");
  return in;
}

inline std::ofstream openOut(const std::filesystem::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + p.string() + "' for writing");
  return out;
}

/// Calls `fn(json, lineNumber)` for every non-blank line.
template <typename Fn>
void forEachJsonLine(std::istream& in, std::string_view source, Fn&& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      parseFail(source, n, e.what());
    }
    try {
      fn(j, n);
    } catch (const Json::exception& e) {
      parseFail(source, n, e.what());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseError) throw;
      parseFail(source, n, e.what());
    }
  }
}

}  // namespace detail

// ---- frames ---------------------------------------------------------------

inline Json frameToJson(const Frame& f) {
  Json j;
  j["schema"] = kFramesSchema;
  j["seq_id"] = f.seqId;
  j["frame_idx"] = f.frameIdx;
  j["timestamp"] = f.timestamp;
  if (f.egoInfo) {
    const auto& e = *f.egoInfo;
    j["ego"] = {{"x", e.x}, {"y", e.y}, {"yaw", e.yaw}, {"vx", e.vx}, {"vy", e.vy}};
  }
  if (f.hasPoints) {
    Json pts = Json::array();
    for (const auto& p : f.points) {
      Json q{{"x", p.x}, {"y", p.y}, {"z", p.z}, {"vr", p.vr}};
      if (p.rcs) q["rcs"] = *p.rcs;
      pts.push_back(std::move(q));
    }
    j["points"] = std::move(pts);
  }
  if (f.hasDetections) {
    Json dets = Json::array();
    for (const auto& d : f.detections) {
      Json q{{"class", to_string(d.classLabel)}, {"score", d.score}};
      detail::putBox(q, d.box);
      dets.push_back(std::move(q));
    }
    j["detections"] = std::move(dets);
  }
  Json gts = Json::array();
  for (const auto& g : f.groundTruth) {
    Json q{{"gt_id", g.gtId}, {"class", to_string(g.classLabel)}};
    detail::putBox(q, g.box);
    gts.push_back(std::move(q));
  }
  j["ground_truth"] = std::move(gts);
  return j;
}

inline Frame frameFromJson(const Json& j) {
  detail::checkSchema(j, kFramesSchema);
  Frame f;
  f.seqId = j.value("seq_id", std::string{});
  f.frameIdx = j.at("frame_idx").get<std::int64_t>();
  f.timestamp = j.at("timestamp").get<double>();
  if (const auto it = j.find("ego"); it != j.end()) {
    EgoInfo e;
    e.x = it->at("x").get<double>();
    e.y = it->at("y").get<double>();
    e.yaw = it->at("yaw").get<double>();
    e.vx = it->at("vx").get<double>();
    e.vy = it->at("vy").get<double>();
    f.egoInfo = e;
  }
  f.hasPoints = j.contains("points");
  if (f.hasPoints)
    for (const auto& q : j.at("points")) {
      RadarPoint p;
      p.x = q.at("x").get<double>();
      p.y = q.at("y").get<double>();
      p.z = q.at("z").get<double>();
      p.vr = q.at("vr").get<double>();
      if (q.contains("rcs")) p.rcs = q.at("rcs").get<double>();
      f.points.push_back(p);
    }
  f.hasDetections = j.contains("detections");
  if (f.hasDetections)
    for (const auto& q : j.at("detections")) {
      Detection d;
      d.classLabel = parseObjectClass(q.at("class").get<std::string>());
      d.score = q.at("score").get<double>();
      d.box = detail::getBox(q);
      f.detections.push_back(d);
    }
  if (const auto it = j.find("ground_truth"); it != j.end())
    for (const auto& q : *it) {
      GroundTruthObject g;
      g.gtId = q.at("gt_id").get<std::int64_t>();
      g.classLabel = parseObjectClass(q.at("class").get<std::string>());
      g.box = detail::getBox(q);
      f.groundTruth.push_back(g);
    }
  return f;
}

inline void writeFrames(std::ostream& out, std::span<const Frame> frames) {
  for (const auto& f : frames) out << frameToJson(f).dump() << '\n';
}

inline std::vector<Frame> readFrames(std::istream& in, std::string_view source = "<frames>") {
  std::vector<Frame> frames;
  detail::forEachJsonLine(in, source, [&](const Json& j, std::size_t) { frames.push_back(frameFromJson(j)); });
  validateSequence(frames);
  return frames;
}

/// A sequence directory holds frames.jsonl; a plain file is read as is.
inline std::filesystem::path framesPath(const std::filesystem::path& input) {
  return std::filesystem::is_directory(input) ? input / "frames.jsonl" : input;
}

inline std::vector<Frame> readFramesFile(const std::filesystem::path& input) {
  const auto p = framesPath(input);
  auto in = detail::openIn(p);
  return readFrames(in, p.string());
}

inline void writeFramesFile(const std::filesystem::path& p, std::span<const Frame> frames) {
  auto out = detail::openOut(p);
  writeFrames(out, frames);
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + p.string() + "'");
}

// ---- tracks ---------------------------------------------------------------

inline Json trackToJson(const TrackRecord& r) {
  Json j{{"schema", kTracksSchema},
         {"track_id", r.trackId},
         {"frame_idx", r.frameIdx},
         {"class", to_string(r.classLabel)},
         {"existence", r.existence}};
  detail::putBox(j, r.box);
  return j;
}

inline TrackRecord trackFromJson(const Json& j) {
  detail::checkSchema(j, kTracksSchema);
  TrackRecord r;
  r.trackId = j.at("track_id").get<TrackId>();
  r.frameIdx = j.at("frame_idx").get<std::int64_t>();
  r.classLabel = parseObjectClass(j.at("class").get<std::string>());
  r.existence = j.at("existence").get<double>();
  r.box = detail::getBox(j);
  if (!(r.existence >= 0 && r.existence <= 1)) throw Error(ErrorCode::ParseError, "existence outside [0,1]");
  return r;
}

inline void writeTracks(std::ostream& out, std::span<const TrackRecord> records) {
  for (const auto& r : records) out << trackToJson(r).dump() << '\n';
}

inline std::vector<TrackRecord> readTracks(std::istream& in, std::string_view source = "<tracks>") {
  std::vector<TrackRecord> out;
  std::set<std::pair<TrackId, std::int64_t>> seen;
  detail::forEachJsonLine(in, source, [&](const Json& j, std::size_t) {
    auto r = trackFromJson(j);
    if (!seen.emplace(r.trackId, r.frameIdx).second)
      throw Error(ErrorCode::ParseError, "duplicate record for track " + std::to_string(r.trackId) + " in frame " +
                                             std::to_string(r.frameIdx));
    out.push_back(r);
  });
  return out;
}

inline std::vector<TrackRecord> readTracksFile(const std::filesystem::path& p) {
  auto in = detail::openIn(p);
  return readTracks(in, p.string());
}

inline void writeTracksFile(const std::filesystem::path& p, std::span<const TrackRecord> records) {
  auto out = detail::openOut(p);
  writeTracks(out, records);
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + p.string() + "'");
}

// ---- configuration ----------------------------------------------------------

struct RunConfig {
  PipelineConfig pipeline;
  MetricsConfig metrics;

  void validate() const {
    pipeline.validate();
    metrics.validate();
  }
};

namespace detail {

inline Json matrixToJson(const Matrix2& m) { return Json::array({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}); }

inline Matrix2 matrixFromJson(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 || !j[1].is_array() || j[1].size() != 2)
    throw Error(ErrorCode::InvalidConfig, "expected a 2x2 matrix [[a,b],[c,d]]");
  Matrix2 m;
  m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(), j[1][1].get<double>();
  return m;
}

inline Json vecToJson(const Vector2& v) { return Json::array({v.x(), v.y()}); }

inline Vector2 vecFromJson(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::InvalidConfig, "expected a 2-vector [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end() && !it->is_null()) out = it->template get<T>();
}

inline Json potClassToJson(const PotClassParams& p) {
  return {{"detection_prob", p.detectionProb},
          {"clutter_intensity", p.clutterIntensity},
          {"measurement_noise", matrixToJson(p.measurementNoise)},
          {"birth_density", p.birthDensity}};
}

inline void potClassFromJson(const Json& j, PotClassParams& p) {
  read(j, "detection_prob", p.detectionProb);
  read(j, "clutter_intensity", p.clutterIntensity);
  if (j.contains("measurement_noise")) p.measurementNoise = matrixFromJson(j.at("measurement_noise"));
  read(j, "birth_density", p.birthDensity);
}

inline Json eotClassToJson(const EotClassParams& p) {
  return {{"detection_prob_measurable", p.detectionProbMeasurable},
          {"clutter_intensity", p.clutterIntensity},
          {"birth_density", p.birthDensity},
          {"birth_rate", {{"a", p.birthRate.a}, {"b", p.birthRate.b}}},
          {"birth_dof", p.birthDof},
          {"birth_extent", matrixToJson(p.birthExtent)},
          {"birth_velocity_std", p.birthVelocityStd},
          {"box_center_z", p.boxCenterZ},
          {"box_height", p.boxHeight}};
}

inline void eotClassFromJson(const Json& j, EotClassParams& p) {
  read(j, "detection_prob_measurable", p.detectionProbMeasurable);
  read(j, "clutter_intensity", p.clutterIntensity);
  read(j, "birth_density", p.birthDensity);
  if (const auto it = j.find("birth_rate"); it != j.end()) {
    read(*it, "a", p.birthRate.a);
    read(*it, "b", p.birthRate.b);
  }
  read(j, "birth_dof", p.birthDof);
  if (j.contains("birth_extent")) p.birthExtent = matrixFromJson(j.at("birth_extent"));
  read(j, "birth_velocity_std", p.birthVelocityStd);
  read(j, "box_center_z", p.boxCenterZ);
  read(j, "box_height", p.boxHeight);
}

template <typename Params, typename ToJson>
Json perClass(const std::array<Params, kNumClasses>& a, ToJson&& toJson) {
  Json j;
  for (auto c : kAllClasses) j[std::string(to_string(c))] = toJson(a[classIndex(c)]);
  return j;
}

template <typename Params, typename FromJson>
void perClassFrom(const Json& j, std::array<Params, kNumClasses>& a, FromJson&& fromJson) {
  for (auto it = j.begin(); it != j.end(); ++it) fromJson(it.value(), a[classIndex(parseObjectClass(it.key()))]);
}

inline Json settingToJson(const ClusteringSetting& s) {
  if (s.method == ClusteringMethod::kmeans) return {{"method", "kmeans"}, {"k", s.k}, {"seed", s.seed}};
  return {{"method", "dbscan"}, {"eps", s.eps}, {"min_pts", s.minPts}};
}

inline ClusteringSetting settingFromJson(const Json& j) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "method" && it.key() != "eps" && it.key() != "min_pts" && it.key() != "k" && it.key() != "seed")
      throw Error(ErrorCode::InvalidConfig, "unknown clustering key '" + it.key() + "'");
  ClusteringSetting s;
  const auto m = j.value("method", std::string("dbscan"));
  if (m == "dbscan") {
    s.method = ClusteringMethod::dbscan;
  } else if (m == "kmeans") {
    s.method = ClusteringMethod::kmeans;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown clustering method '" + m + "'");
  }
  read(j, "eps", s.eps);
  read(j, "min_pts", s.minPts);
  read(j, "k", s.k);
  read(j, "seed", s.seed);
  return s;
}

/// Every object key in `given` must exist in `known`; arrays are checked by
/// their own parsers.
inline void checkKnownKeys(const Json& given, const Json& known, const std::string& path) {
  if (!given.is_object() || !known.is_object()) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    const auto k = known.find(it.key());
    const std::string here = path.empty() ? it.key() : path + "." + it.key();
    if (k == known.end()) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + here + "'");
    checkKnownKeys(it.value(), *k, here);
  }
}

}  // namespace detail

inline Json configToJson(const RunConfig& c) {
  const auto& p = c.pipeline;
  Json j;
  j["schema"] = kConfigSchema;
  j["framework"] = to_string(p.framework);
  Json thr;
  for (auto cl : kAllClasses) thr[std::string(to_string(cl))] = p.scoreThreshold[classIndex(cl)];
  j["score_threshold"] = thr;
  j["radial_speed_prefilter"] = p.radialSpeedPrefilter;
  j["min_radial_speed"] = p.minRadialSpeed;
  j["nominal_rate"] = p.nominalRate;
  j["adaptive_gate"] = p.adaptiveGate;
  j["adaptive_gate_sigma"] = p.adaptiveGateSigma;

  const auto& pot = p.pot;
  j["pot"] = {{"survival_prob", pot.survivalProb},
              {"process_noise", pot.processNoise},
              {"gate_threshold", pot.gateThreshold},
              {"existence_extract_threshold", pot.existenceExtractThreshold},
              {"existence_prune_threshold", pot.existencePruneThreshold},
              {"ppp_prune_threshold", pot.pppPruneThreshold},
              {"birth_velocity_std", pot.birthVelocityStd},
              {"score_modulates_pd", pot.scoreModulatesPd},
              {"score_modulates_birth", pot.scoreModulatesBirth},
              {"classes", detail::perClass(pot.classes, detail::potClassToJson)}};

  const auto& eot = p.eot;
  Json sizes = Json::array();
  for (const auto& r : eot.sizeTable)
    sizes.push_back({{"class", to_string(r.classLabel)},
                     {"width_min", r.widthMin},
                     {"width_max", r.widthMax},
                     {"length_min", r.lengthMin},
                     {"length_max", r.lengthMax}});
  j["eot"] = {{"survival_prob", eot.survivalProb},
              {"process_noise", eot.processNoise},
              {"forgetting", eot.forgetting},
              {"extent_tau", eot.extentTau},
              {"gate_radius", eot.gateRadius},
              {"max_hypotheses", eot.maxHypotheses},
              {"hypothesis_prune_threshold", eot.hypothesisPruneThreshold},
              {"existence_extract_threshold", eot.existenceExtractThreshold},
              {"existence_prune_threshold", eot.existencePruneThreshold},
              {"nms_iou_threshold", eot.nmsIouThreshold},
              {"axis_scale", eot.axisScale},
              {"size_table", sizes},
              {"generic", detail::eotClassToJson(eot.generic)},
              {"classes", detail::perClass(eot.classes, detail::eotClassToJson)}};

  Json settings = Json::array();
  for (const auto& s : p.clustering.settings) settings.push_back(detail::settingToJson(s));
  j["clustering"] = {{"settings", settings}};

  const auto& m = c.metrics;
  j["metrics"] = {{"d0", m.d0}, {"alpha_clear", m.alphaClear}, {"alpha_grid", m.alphaGrid}, {"class_agnostic", m.classAgnostic}};
  return j;
}

/// Missing keys keep their built-in defaults; unknown keys are rejected.
inline RunConfig configFromJson(const Json& j) {
  using detail::read;
  RunConfig c;
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  try {
    detail::checkKnownKeys(j, configToJson(c), "");
    if (j.contains("schema")) detail::checkSchema(j, kConfigSchema);
    auto& p = c.pipeline;
    if (j.contains("framework")) p.framework = parseFramework(j.at("framework").get<std::string>());
    if (const auto it = j.find("score_threshold"); it != j.end())
      for (auto t = it->begin(); t != it->end(); ++t)
        p.scoreThreshold[classIndex(parseObjectClass(t.key()))] = t.value().get<double>();
    read(j, "radial_speed_prefilter", p.radialSpeedPrefilter);
    read(j, "min_radial_speed", p.minRadialSpeed);
    read(j, "nominal_rate", p.nominalRate);
    read(j, "adaptive_gate", p.adaptiveGate);
    read(j, "adaptive_gate_sigma", p.adaptiveGateSigma);

    if (const auto it = j.find("pot"); it != j.end()) {
      const auto& q = *it;
      auto& pot = p.pot;
      read(q, "survival_prob", pot.survivalProb);
      read(q, "process_noise", pot.processNoise);
      read(q, "gate_threshold", pot.gateThreshold);
      read(q, "existence_extract_threshold", pot.existenceExtractThreshold);
      read(q, "existence_prune_threshold", pot.existencePruneThreshold);
      read(q, "ppp_prune_threshold", pot.pppPruneThreshold);
      read(q, "birth_velocity_std", pot.birthVelocityStd);
      read(q, "score_modulates_pd", pot.scoreModulatesPd);
      read(q, "score_modulates_birth", pot.scoreModulatesBirth);
      if (q.contains("classes")) detail::perClassFrom(q.at("classes"), pot.classes, detail::potClassFromJson);
    }
    if (const auto it = j.find("eot"); it != j.end()) {
      const auto& q = *it;
      auto& eot = p.eot;
      read(q, "survival_prob", eot.survivalProb);
      read(q, "process_noise", eot.processNoise);
      read(q, "forgetting", eot.forgetting);
      read(q, "extent_tau", eot.extentTau);
      read(q, "gate_radius", eot.gateRadius);
      read(q, "max_hypotheses", eot.maxHypotheses);
      read(q, "hypothesis_prune_threshold", eot.hypothesisPruneThreshold);
      read(q, "existence_extract_threshold", eot.existenceExtractThreshold);
      read(q, "existence_prune_threshold", eot.existencePruneThreshold);
      read(q, "nms_iou_threshold", eot.nmsIouThreshold);
      read(q, "axis_scale", eot.axisScale);
      if (const auto s = q.find("size_table"); s != q.end()) {
        eot.sizeTable.clear();
        for (const auto& r : *s)
          eot.sizeTable.push_back({parseObjectClass(r.at("class").get<std::string>()), r.at("width_min").get<double>(),
                                   r.at("width_max").get<double>(), r.at("length_min").get<double>(),
                                   r.at("length_max").get<double>()});
      }
      if (q.contains("generic")) detail::eotClassFromJson(q.at("generic"), eot.generic);
      if (q.contains("classes")) detail::perClassFrom(q.at("classes"), eot.classes, detail::eotClassFromJson);
    }
    if (const auto it = j.find("clustering"); it != j.end() && it->contains("settings")) {
      p.clustering.settings.clear();
      for (const auto& s : it->at("settings")) p.clustering.settings.push_back(detail::settingFromJson(s));
    }
    if (const auto it = j.find("metrics"); it != j.end()) {
      read(*it, "d0", c.metrics.d0);
      read(*it, "alpha_clear", c.metrics.alphaClear);
      read(*it, "alpha_grid", c.metrics.alphaGrid);
      read(*it, "class_agnostic", c.metrics.classAgnostic);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline Json readJsonFile(const std::filesystem::path& p) {
  auto in = detail::openIn(p);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, p.string() + ": " + e.what());
  }
}

/// Applies "a.b.c=value"; the value is read as JSON when it parses, else as a string.
inline void applyOverride(Json& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw Error(ErrorCode::InvalidConfig, "override '" + std::string(assignment) + "' is not key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  Json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::InvalidConfig, "bad override key '" + key + "'");
    if (!node->is_object()) *node = Json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

/// Built-in defaults, then the defaults file, then the run file, then
/// command-line overrides; later layers win key by key (JSON merge patch).
inline Json layeredConfig(const std::vector<std::filesystem::path>& files, const std::vector<std::string>& overrides) {
  Json merged = configToJson(RunConfig{});
  for (const auto& f : files) {
    const Json layer = readJsonFile(f);
    if (!layer.is_object()) throw Error(ErrorCode::InvalidConfig, f.string() + ": config must be a JSON object");
    merged.merge_patch(layer);
  }
  for (const auto& o : overrides) applyOverride(merged, o);
  return merged;
}

// ---- scenarios --------------------------------------------------------------

inline Json scenarioToJson(const ScenarioConfig& s) {
  Json j;
  j["schema"] = kScenarioSchema;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["duration"] = s.duration;
  j["frame_rate"] = s.frameRate;
  j["clutter_rate"] = s.clutterRate;
  j["field_of_view"] = {{"x_min", s.fieldOfView.xMin},
                        {"x_max", s.fieldOfView.xMax},
                        {"y_min", s.fieldOfView.yMin},
                        {"y_max", s.fieldOfView.yMax}};
  j["sensor_position"] = detail::vecToJson(s.sensorPosition);
  const auto& d = s.detector;
  j["detector"] = {{"fn_rate", d.fnRate},
                   {"fp_rate", d.fpRate},
                   {"center_noise", d.centerNoise},
                   {"size_noise", d.sizeNoise},
                   {"yaw_noise", d.yawNoise},
                   {"tp_score", {d.tpScoreMin, d.tpScoreMax}},
                   {"fp_score", {d.fpScoreMin, d.fpScoreMax}}};
  Json objs = Json::array();
  for (const auto& o : s.objects) {
    Json q{{"class", to_string(o.classLabel)},
           {"birth_frame", o.birthFrame},
           {"death_frame", o.deathFrame},
           {"position", detail::vecToJson(o.position)},
           {"yaw", o.yaw},
           {"velocity", detail::vecToJson(o.velocity)},
           {"extent", detail::matrixToJson(o.extent)},
           {"point_rate", o.pointRate},
           {"skew_factor", o.skewFactor},
           {"height", o.height}};
    Json wps = Json::array();
    for (const auto& w : o.waypoints) wps.push_back({{"frame", w.frame}, {"velocity", detail::vecToJson(w.velocity)}});
    q["waypoints"] = wps;
    objs.push_back(std::move(q));
  }
  j["objects"] = objs;
  Json stat = Json::array();
  for (const auto& c : s.staticClutter)
    stat.push_back({{"position", detail::vecToJson(c.position)}, {"point_rate", c.pointRate}, {"sigma", c.sigma}});
  j["static_clutter"] = stat;
  return j;
}

/// Objects give either "extent" (2x2, body frame) or "size" [length, width].
/// An optional "roadside" block {spacing, point_rate} adds roadside clutter
/// posts, and "dense_clutter_rate" overrides the clutter rate.
inline ScenarioConfig scenarioFromJson(const Json& j) {
  using detail::read;
  ScenarioConfig s;
  try {
    if (j.contains("schema")) detail::checkSchema(j, kScenarioSchema);
    read(j, "name", s.name);
    read(j, "seed", s.seed);
    read(j, "duration", s.duration);
    read(j, "frame_rate", s.frameRate);
    read(j, "clutter_rate", s.clutterRate);
    if (const auto it = j.find("field_of_view"); it != j.end()) {
      read(*it, "x_min", s.fieldOfView.xMin);
      read(*it, "x_max", s.fieldOfView.xMax);
      read(*it, "y_min", s.fieldOfView.yMin);
      read(*it, "y_max", s.fieldOfView.yMax);
    }
    if (j.contains("sensor_position")) s.sensorPosition = detail::vecFromJson(j.at("sensor_position"));
    if (const auto it = j.find("detector"); it != j.end()) {
      auto& d = s.detector;
      read(*it, "fn_rate", d.fnRate);
      read(*it, "fp_rate", d.fpRate);
      read(*it, "center_noise", d.centerNoise);
      read(*it, "size_noise", d.sizeNoise);
      read(*it, "yaw_noise", d.yawNoise);
      if (it->contains("tp_score")) {
        const auto v = detail::vecFromJson(it->at("tp_score"));
        d.tpScoreMin = v.x();
        d.tpScoreMax = v.y();
      }
      if (it->contains("fp_score")) {
        const auto v = detail::vecFromJson(it->at("fp_score"));
        d.fpScoreMin = v.x();
        d.fpScoreMax = v.y();
      }
    }
    if (const auto it = j.find("objects"); it != j.end())
      for (const auto& q : *it) {
        ScenarioObject o;
        o.classLabel = parseObjectClass(q.at("class").get<std::string>());
        read(q, "birth_frame", o.birthFrame);
        read(q, "death_frame", o.deathFrame);
        if (q.contains("position")) o.position = detail::vecFromJson(q.at("position"));
        read(q, "yaw", o.yaw);
        if (q.contains("velocity")) o.velocity = detail::vecFromJson(q.at("velocity"));
        if (q.contains("extent")) {
          o.extent = detail::matrixFromJson(q.at("extent"));
        } else if (q.contains("size")) {
          const auto lw = detail::vecFromJson(q.at("size"));
          o.extent = extentFromSize(lw.x(), lw.y());
        }
        read(q, "point_rate", o.pointRate);
        read(q, "skew_factor", o.skewFactor);
        read(q, "height", o.height);
        if (const auto w = q.find("waypoints"); w != q.end())
          for (const auto& wp : *w) o.waypoints.push_back({wp.at("frame").get<int>(), detail::vecFromJson(wp.at("velocity"))});
        s.objects.push_back(std::move(o));
      }
    if (const auto it = j.find("static_clutter"); it != j.end())
      for (const auto& q : *it) {
        StaticClutter c;
        c.position = detail::vecFromJson(q.at("position"));
        read(q, "point_rate", c.pointRate);
        read(q, "sigma", c.sigma);
        s.staticClutter.push_back(c);
      }
    if (const auto it = j.find("roadside"); it != j.end()) {
      double spacing = 6.0, rate = 4.0;
      read(*it, "spacing", spacing);
      read(*it, "point_rate", rate);
      if (!(spacing > 0)) throw Error(ErrorCode::InvalidConfig, "scenario: roadside.spacing must be > 0");
      const auto name = s.name;
      s = roadsidePreset(std::move(s), spacing, rate);
      s.name = name;
    }
    if (j.contains("dense_clutter_rate")) s.clutterRate = j.at("dense_clutter_rate").get<double>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    throw Error(ErrorCode::InvalidConfig, std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

inline ScenarioConfig readScenarioFile(const std::filesystem::path& p) {
  const Json j = readJsonFile(p);
  return scenarioFromJson(j);
}

// ---- manifest ---------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string configHash(const Json& cfg) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(cfg.dump());
  return os.str();
}

struct RunManifest {
  std::string command;
  Json config;  ///< merged configuration as used
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  double wallSeconds = 0.0;
  std::size_t frames = 0;
};

inline Json manifestToJson(const RunManifest& m) {
  Json j;
  j["schema"] = kManifestSchema;
  j["version"] = kToolkitVersion;
  j["command"] = m.command;
  j["config_hash"] = configHash(m.config);
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["seed"] = m.seed ? Json(*m.seed) : Json(nullptr);
  j["wall_clock"] = {{"seconds", m.wallSeconds},
                     {"frames", m.frames},
                     {"fps", fpsFromElapsed(m.frames, m.wallSeconds)}};
  return j;
}

inline void writeJsonFile(const std::filesystem::path& p, const Json& j) {
  auto out = detail::openOut(p);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + p.string() + "'");
}

}  // namespace radmot
