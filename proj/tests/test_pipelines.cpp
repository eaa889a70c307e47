#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "radmot/metrics.hpp"
#include "radmot/pipelines.hpp"
#include "radmot/scenario.hpp"

using namespace radmot;

namespace {

ScenarioConfig singleObject(std::uint64_t seed, double rate) {
  auto cfg = defaultScenario(seed);
  cfg.objects.resize(1);
  cfg.objects[0].pointRate = rate;
  cfg.clutterRate = 0;
  cfg.duration = 60;
  return cfg;
}

std::vector<TrackRecord> runFramework(Framework f, std::span<const Frame> frames) {
  PipelineConfig cfg;
  cfg.framework = f;
  return runPipeline(frames, cfg);
}

std::vector<TrackRecord> upTo(const std::vector<TrackRecord>& recs, std::int64_t last) {
  std::vector<TrackRecord> out;
  for (const auto& r : recs)
    if (r.frameIdx <= last) out.push_back(r);
  return out;
}

}  // namespace

TEST(Framework, ParseRoundTrip) {
  for (auto f : {Framework::tbdPot, Framework::jdtEot, Framework::tbdEot}) EXPECT_EQ(parseFramework(to_string(f)), f);
  EXPECT_THROW(parseFramework("gm-phd"), Error);
}

TEST(PipelineConfig, ValidatesThresholds) {
  PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.scoreThreshold[0] = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = PipelineConfig{};
  cfg.nominalRate = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(FrameDt, FallsBackToNominalRate) {
  EXPECT_DOUBLE_EQ(detail::frameDt(1.0, 1.25, 10.0), 0.25);
  EXPECT_DOUBLE_EQ(detail::frameDt(1.0, 1.0, 10.0), 0.1);
  EXPECT_DOUBLE_EQ(detail::frameDt(2.0, 1.0, 4.0), 0.25);
}

TEST(PointInRotatedBox, Examples) {
  Box3D b;
  b.cx = 2;
  b.cy = 1;
  b.length = 4;
  b.width = 2;
  EXPECT_TRUE(pointInRotatedBox(Eigen::Vector2d(2, 1), b));
  EXPECT_TRUE(pointInRotatedBox(Eigen::Vector2d(4, 2), b));  // corner
  EXPECT_FALSE(pointInRotatedBox(Eigen::Vector2d(4.1, 1), b));

  b.yaw = M_PI / 4;
  const Eigen::Vector2d onAxis(2 + 2 * std::cos(M_PI / 4), 1 + 2 * std::sin(M_PI / 4));
  EXPECT_TRUE(pointInRotatedBox(onAxis, b));
  b.yaw = 0;
  EXPECT_FALSE(pointInRotatedBox(onAxis, b));
}

TEST(SelectPointsInBoxes, CenterInsideEdgeOutside) {
  Detection d;
  d.box.cx = 10;
  d.box.length = 4;
  d.box.width = 2;
  d.classLabel = ObjectClass::car;
  const std::vector<RadarPoint> pts{{10, 0, 0, 0, {}}, {12.1, 0, 0, 0, {}}, {10, 1.0, 0, 0, {}}};
  const std::vector<Detection> dets{d};
  const auto sel = selectPointsInBoxes(pts, dets);
  EXPECT_EQ(sel.indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(sel.classes[0], ObjectClass::car);
}

TEST(SelectPointsInBoxes, OverlapTakesHighestScore) {
  Detection a, b;
  a.box.length = b.box.length = 3;
  a.box.width = b.box.width = 3;
  a.classLabel = ObjectClass::car;
  a.score = 0.6;
  b.classLabel = ObjectClass::cyclist;
  b.score = 0.8;
  const std::vector<RadarPoint> pts{{0, 0, 0, 0, {}}};
  EXPECT_EQ(selectPointsInBoxes(pts, std::vector<Detection>{a, b}).classes[0], ObjectClass::cyclist);
  b.score = 0.6;
  EXPECT_EQ(selectPointsInBoxes(pts, std::vector<Detection>{a, b}).classes[0], ObjectClass::car);
}

TEST(SelectPointsInBoxes, SelectedSubsetLiesInSomeBox) {
  const auto frames = simulate(defaultScenario(6));
  for (std::size_t k = 0; k < frames.size(); k += 10) {
    const auto& f = frames[k];
    const auto sel = selectPointsInBoxes(f.points, f.detections);
    for (auto i : sel.indices) {
      ASSERT_LT(i, f.points.size());
      EXPECT_TRUE(std::any_of(f.detections.begin(), f.detections.end(),
                              [&](const Detection& d) { return pointInRotatedBox(f.points[i], d.box); }));
    }
    for (std::size_t i = 0; i < f.points.size(); ++i)
      if (!std::binary_search(sel.indices.begin(), sel.indices.end(), i))
        for (const auto& d : f.detections) EXPECT_FALSE(pointInRotatedBox(f.points[i], d.box));
  }
}

TEST(TbdPot, EmptySequenceAndMissingDetections) {
  EXPECT_TRUE(runTbdPot({}, PipelineConfig{}).empty());
  std::vector<Frame> frames(1);
  frames[0].hasDetections = false;
  try {
    runTbdPot(frames, PipelineConfig{});
    FAIL() << "expected MissingDetections";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingDetections);
  }
}

TEST(TbdPot, PerfectDetectionsGivePerfectMota) {
  auto sc = defaultScenario(12);
  sc.duration = 80;
  sc.detector.fnRate = sc.detector.fpRate = 0;
  sc.detector.centerNoise = sc.detector.sizeNoise = sc.detector.yawNoise = 0;
  const auto frames = simulate(sc);
  const auto recs = runFramework(Framework::tbdPot, frames);
  // Tracks are confirmed on their second detection; score from frame 1 on.
  const std::vector<Frame> scored(frames.begin() + 1, frames.end());
  const auto r = clearMetrics(recs, scored, MetricsConfig{});
  EXPECT_EQ(r.fn, 0);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.ids, 0);
  EXPECT_DOUBLE_EQ(r.mota, 1.0);
}

TEST(TbdPot, TracksCoastThroughEmptyFrame) {
  auto sc = defaultScenario(3);
  sc.duration = 20;
  sc.detector.fnRate = sc.detector.fpRate = 0;
  auto frames = simulate(sc);
  frames[15].detections.clear();
  PipelineConfig cfg;
  TbdPotTracker tracker(cfg);
  std::vector<TrackRecord> before, during;
  for (const auto& f : frames) {
    auto recs = tracker.step(f);
    if (f.frameIdx == 14) before = recs;
    if (f.frameIdx == 15) during = recs;
  }
  ASSERT_EQ(before.size(), 3u);
  ASSERT_EQ(during.size(), before.size());
  std::set<TrackId> a, b;
  for (const auto& r : before) a.insert(r.trackId);
  for (const auto& r : during) b.insert(r.trackId);
  EXPECT_EQ(a, b);
  for (const auto& r : during) EXPECT_LT(r.existence, 1.0);
}

TEST(JdtEot, SingleObjectGivesOneStableTrack) {
  const auto frames = simulate(singleObject(31, 8.0));
  const auto recs = runFramework(Framework::jdtEot, frames);
  std::set<TrackId> ids;
  std::set<std::int64_t> covered;
  for (const auto& r : recs) {
    ids.insert(r.trackId);
    covered.insert(r.frameIdx);
  }
  EXPECT_EQ(ids.size(), 1u);
  EXPECT_EQ(recs.size(), covered.size());
  EXPECT_GE(covered.size(), frames.size() - 2);
}

TEST(JdtEot, ClutterOnlyGivesNoTracks) {
  for (std::uint64_t seed = 70; seed < 75; ++seed) {
    auto sc = defaultScenario(seed);
    sc.objects.clear();
    sc.duration = 100;
    EXPECT_TRUE(runFramework(Framework::jdtEot, simulate(sc)).empty()) << "seed " << seed;
  }
}

TEST(JdtEot, EmptyCloudsAndMissingPoints) {
  std::vector<Frame> frames(5);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    frames[k].frameIdx = static_cast<std::int64_t>(k);
    frames[k].timestamp = 0.1 * static_cast<double>(k);
  }
  EXPECT_TRUE(runJdtEot(frames, PipelineConfig{}).empty());
  frames[2].hasPoints = false;
  try {
    runJdtEot(frames, PipelineConfig{});
    FAIL() << "expected MissingPoints";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingPoints);
  }
}

TEST(TbdEot, RequiresPointsAndDetections) {
  std::vector<Frame> frames(2);
  frames[1].frameIdx = 1;
  frames[1].hasDetections = false;
  EXPECT_THROW(runTbdEot(frames, PipelineConfig{}), Error);
  frames[1].hasDetections = true;
  frames[0].hasPoints = false;
  EXPECT_THROW(runTbdEot(frames, PipelineConfig{}), Error);
}

TEST(TbdEot, EndToEndOnDefaultScenario) {
  auto sc = defaultScenario(8);
  sc.duration = 40;
  const auto frames = simulate(sc);
  const auto recs = runFramework(Framework::tbdEot, frames);
  ASSERT_FALSE(recs.empty());
  for (const auto& r : recs) EXPECT_NE(r.classLabel, ObjectClass::other);
  const auto h = hota(recs, frames, MetricsConfig{});
  EXPECT_GT(h.hota, 0.5);
}

TEST(TbdEot, FewerFalsePositivesThanJdtEotInClutter) {
  double fpTbd = 0, fpJdt = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto sc = defaultScenario(200 + static_cast<std::uint64_t>(s));
    sc.duration = 60;
    const auto frames = simulate(sc);
    fpTbd += static_cast<double>(clearMetrics(runFramework(Framework::tbdEot, frames), frames, MetricsConfig{}).fp);
    fpJdt += static_cast<double>(clearMetrics(runFramework(Framework::jdtEot, frames), frames, MetricsConfig{}).fp);
  }
  EXPECT_LE(fpTbd / seeds, fpJdt / seeds);
}

class AllFrameworks : public ::testing::TestWithParam<Framework> {};

TEST_P(AllFrameworks, Deterministic) {
  auto sc = defaultScenario(44);
  sc.duration = 50;
  const auto frames = simulate(sc);
  EXPECT_EQ(runFramework(GetParam(), frames), runFramework(GetParam(), frames));
}

TEST_P(AllFrameworks, OnlineCausality) {
  auto sc = defaultScenario(45);
  sc.duration = 50;
  const auto frames = simulate(sc);
  const auto full = runFramework(GetParam(), frames);
  for (std::size_t t : {0u, 9u, 30u}) {
    const std::vector<Frame> prefix(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(t + 1));
    EXPECT_EQ(runFramework(GetParam(), prefix), upTo(full, frames[t].frameIdx)) << "t=" << t;
  }
}

TEST_P(AllFrameworks, AtMostOneRecordPerTrackAndFrame) {
  const auto frames = simulate(roadsidePreset(defaultScenario(46)));
  std::set<std::pair<TrackId, std::int64_t>> seen;
  for (const auto& r : runFramework(GetParam(), frames)) {
    EXPECT_TRUE(seen.emplace(r.trackId, r.frameIdx).second);
    EXPECT_GE(r.existence, 0.0);
    EXPECT_LE(r.existence, 1.0);
    EXPECT_TRUE(r.box.valid());
  }
}

INSTANTIATE_TEST_SUITE_P(Pipelines, AllFrameworks,
                         ::testing::Values(Framework::tbdPot, Framework::jdtEot, Framework::tbdEot),
                         [](const auto& info) {
                           std::string s(to_string(info.param));
                           s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
                           return s;
                         });
