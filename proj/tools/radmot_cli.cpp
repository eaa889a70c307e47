// radmot command-line tool: simulate, track, evaluate, report, bench.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "radmot/io.hpp"
#include "radmot/metrics.hpp"
#include "radmot/pipelines.hpp"
#include "radmot/scenario.hpp"

namespace fs = std::filesystem;
using namespace radmot;

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kConfigError = 2, kInternalError = 3 };

// RADMOT_LOG: quiet, error, info (default) or debug.
enum class LogLevel { quiet, error, info, debug };

LogLevel logLevel() {
  static const LogLevel level = [] {
    const char* v = std::getenv("RADMOT_LOG");
    const std::string s = v ? v : "info";
    if (s == "quiet") return LogLevel::quiet;
    if (s == "error") return LogLevel::error;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::info;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  if (level == LogLevel::quiet || static_cast<int>(level) > static_cast<int>(logLevel())) return;
  std::cerr << "radmot: " << msg << '\n';
}

int exitCodeFor(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig: return kConfigError;
    case ErrorCode::Infeasible:
    case ErrorCode::InvalidPartition:
    case ErrorCode::DegenerateExtent: return kInternalError;
    default: return kInputError;
  }
}

double secondsSince(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string commandLine(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

// Config layers shared by the commands that take a tracker or metrics config.
struct ConfigOptions {
  std::string defaults;
  std::string file;
  std::vector<std::string> sets;

  void add(CLI::App* cmd) {
    cmd->add_option("--defaults", defaults, "Defaults file (default: $RADMOT_DEFAULTS or the committed config/defaults.json)");
    cmd->add_option("--config", file, "Per-run config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "Override one key, e.g. --set eot.gate_radius=3")->take_all();
  }

  [[nodiscard]] std::vector<fs::path> files() const {
    std::vector<fs::path> out;
    std::string d = defaults;
    if (d.empty())
      if (const char* env = std::getenv("RADMOT_DEFAULTS")) d = env;
#ifdef RADMOT_CONFIG_DIR
    if (d.empty() && fs::exists(fs::path(RADMOT_CONFIG_DIR) / "defaults.json"))
      d = (fs::path(RADMOT_CONFIG_DIR) / "defaults.json").string();
#endif
    if (!d.empty()) out.emplace_back(d);
    if (!file.empty()) out.emplace_back(file);
    return out;
  }

  [[nodiscard]] Json merged() const { return layeredConfig(files(), sets); }

  [[nodiscard]] std::vector<std::string> inputs() const {
    std::vector<std::string> v;
    for (const auto& f : files()) v.push_back(f.string());
    return v;
  }
};

// ---- simulate -------------------------------------------------------------

struct SimulateCmd {
  std::string scenario, out, channels = "points,detections";
  std::optional<std::uint64_t> seed;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("simulate", "Generate a synthetic sequence from a scenario file");
    c->add_option("--scenario", scenario, "Scenario JSON file")->required();
    c->add_option("--seed", seed, "Override the scenario seed");
    c->add_option("--out", out, "Sequence directory to write")->required();
    c->add_option("--channels", channels, "Comma list of channels to keep: points, detections");
    c->callback([this] { run_ = true; });
  }

  int run(const std::string& cmdline) const {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = readScenarioFile(scenario);
    if (seed) cfg.seed = *seed;
    const bool keepPoints = channels.find("points") != std::string::npos;
    const bool keepDets = channels.find("detections") != std::string::npos;
    auto frames = simulate(cfg);
    for (auto& f : frames) {
      if (!keepPoints) {
        f.points.clear();
        f.hasPoints = false;
      }
      if (!keepDets) {
        f.detections.clear();
        f.hasDetections = false;
      }
    }
    const fs::path dir(out);
    writeFramesFile(dir / "frames.jsonl", frames);
    RunManifest m;
    m.command = cmdline;
    m.config = scenarioToJson(cfg);
    m.inputs = {scenario};
    m.outputs = {(dir / "frames.jsonl").string()};
    m.seed = cfg.seed;
    m.frames = frames.size();
    m.wallSeconds = secondsSince(t0);
    writeJsonFile(dir / "manifest.json", manifestToJson(m));
    log(LogLevel::info, "wrote " + std::to_string(frames.size()) + " frames to " + (dir / "frames.jsonl").string());
    return kOk;
  }

  bool run_ = false;
};

// ---- track ----------------------------------------------------------------

struct TrackCmd {
  std::string framework, input, out;
  ConfigOptions config;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("track", "Run a tracker over a sequence");
    c->add_option("--framework", framework, "tbd-pot, jdt-eot or tbd-eot (overrides the config)");
    c->add_option("--input", input, "Sequence directory or frames file")->required();
    c->add_option("--out", out, "Track records file to write")->required();
    config.add(c);
    c->callback([this] { run_ = true; });
  }

  int run(const std::string& cmdline) const {
    Json merged = config.merged();
    if (!framework.empty()) merged["framework"] = framework;
    const RunConfig cfg = configFromJson(merged);
    const auto frames = readFramesFile(input);
    log(LogLevel::debug, "config hash " + configHash(merged));
    const auto t0 = std::chrono::steady_clock::now();
    const auto records = runPipeline(frames, cfg.pipeline);
    const double secs = secondsSince(t0);
    writeTracksFile(out, records);
    RunManifest m;
    m.command = cmdline;
    m.config = merged;
    m.inputs = config.inputs();
    m.inputs.insert(m.inputs.begin(), framesPath(input).string());
    m.outputs = {out};
    m.frames = frames.size();
    m.wallSeconds = secs;
    writeJsonFile(fs::path(out).string() + ".manifest.json", manifestToJson(m));
    log(LogLevel::info, std::string(to_string(cfg.pipeline.framework)) + ": " + std::to_string(records.size()) + " records over " +
                            std::to_string(frames.size()) + " frames");
    return kOk;
  }

  bool run_ = false;
};

// ---- evaluate ---------------------------------------------------------------

std::vector<ObjectClass> classesPresent(std::span<const Frame> frames, std::span<const TrackRecord> records) {
  std::array<bool, kNumClasses> seen{};
  for (const auto& f : frames)
    for (const auto& g : f.groundTruth) seen[classIndex(g.classLabel)] = true;
  for (const auto& r : records) seen[classIndex(r.classLabel)] = true;
  std::vector<ObjectClass> out;
  for (auto c : kAllClasses)
    if (seen[classIndex(c)]) out.push_back(c);
  return out;
}

std::vector<Frame> onlyClass(std::vector<Frame> frames, ObjectClass c) {
  for (auto& f : frames)
    std::erase_if(f.groundTruth, [c](const GroundTruthObject& g) { return g.classLabel != c; });
  return frames;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

struct EvaluateCmd {
  std::string gt, pred, report;
  bool classAgnostic = false, alphaSweep = false;
  ConfigOptions config;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("evaluate", "Score track records against ground truth");
    c->add_option("--gt", gt, "Sequence directory or frames file with ground truth")->required();
    c->add_option("--pred", pred, "Track records file")->required();
    c->add_flag("--class-agnostic", classAgnostic, "Add class-blind TP/FN counts (2 m radius)");
    c->add_flag("--alpha-sweep", alphaSweep, "Add MOTA at alpha 0.5, 0.6, 0.7, 0.8");
    c->add_option("--report", report, "JSON report to write")->required();
    config.add(c);
    c->callback([this] { run_ = true; });
  }

  int run(const std::string& cmdline) const {
    const Json merged = config.merged();
    const RunConfig cfg = configFromJson(merged);
    const auto frames = readFramesFile(gt);
    const auto records = readTracksFile(pred);

    Json rows = Json::array();
    std::ostringstream table;
    table << std::left << std::setw(12) << "class" << std::right;
    for (const char* h : {"HOTA", "DetA", "AssA", "LocA", "MOTA", "MOTP"}) table << std::setw(8) << h;
    for (const char* h : {"TP", "FN", "FP", "IDS"}) table << std::setw(8) << h;
    table << '\n';
    for (auto c : classesPresent(frames, records)) {
      MetricsConfig mc = cfg.metrics;
      mc.classFilter = c;
      const auto h = hota(records, frames, mc);
      const auto cl = clearMetrics(records, frames, mc);
      rows.push_back({{"class", to_string(c)}, {"hota", h.hota}, {"det_a", h.detA}, {"ass_a", h.assA},
                      {"loc_a", h.locA}, {"mota", cl.mota}, {"motp", cl.motp}, {"tp", cl.tp}, {"fn", cl.fn},
                      {"fp", cl.fp}, {"ids", cl.ids}});
      table << std::left << std::setw(12) << to_string(c) << std::right;
      for (double v : {h.hota, h.detA, h.assA, h.locA, cl.mota, cl.motp}) table << std::setw(8) << fixed(100 * v, 2);
      for (auto v : {cl.tp, cl.fn, cl.fp, cl.ids}) table << std::setw(8) << v;
      table << '\n';
    }

    Json doc;
    doc["schema"] = "radmot.report/1";
    doc["gt"] = framesPath(gt).string();
    doc["pred"] = pred;
    doc["config_hash"] = configHash(merged);
    doc["alpha_clear"] = cfg.metrics.alphaClear;
    doc["d0"] = cfg.metrics.d0;
    doc["classes"] = rows;

    if (alphaSweep) {
      const std::vector<double> alphas{0.5, 0.6, 0.7, 0.8};
      Json sweep = Json::array();
      table << "\nMOTA by alpha\n" << std::left << std::setw(12) << "class" << std::right;
      for (double a : alphas) table << std::setw(8) << fixed(a, 1);
      table << '\n';
      for (auto c : classesPresent(frames, records)) {
        MetricsConfig mc = cfg.metrics;
        mc.classFilter = c;
        table << std::left << std::setw(12) << to_string(c) << std::right;
        for (const auto& [a, mota] : motaSweep(records, frames, alphas, mc)) {
          sweep.push_back({{"class", to_string(c)}, {"alpha", a}, {"mota", mota}});
          table << std::setw(8) << fixed(100 * mota, 2);
        }
        table << '\n';
      }
      doc["alpha_sweep"] = sweep;
    }

    if (classAgnostic) {
      // Ground truth of one class against every estimate regardless of label.
      Json counts = Json::array();
      table << "\nclass-agnostic (2 m)\n" << std::left << std::setw(12) << "class" << std::right << std::setw(8) << "TP"
            << std::setw(8) << "FN" << '\n';
      for (auto c : classesPresent(frames, {})) {
        const auto sub = onlyClass(frames, c);
        const auto a = classAgnosticCounts(records, sub, 2.0);
        counts.push_back({{"class", to_string(c)}, {"tp", a.tp}, {"fn", a.fn}});
        table << std::left << std::setw(12) << to_string(c) << std::right << std::setw(8) << a.tp << std::setw(8) << a.fn
              << '\n';
      }
      doc["class_agnostic"] = counts;
    }

    writeJsonFile(report, doc);
    std::cout << table.str();
    log(LogLevel::debug, cmdline);
    return kOk;
  }

  bool run_ = false;
};

// ---- report ------------------------------------------------------------------

struct ReportCmd {
  std::string gt, pred, histogram, out, className;
  double binWidth = 0.25;
  ConfigOptions config;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Tabular exports derived from an evaluation");
    c->add_option("--gt", gt, "Sequence directory or frames file with ground truth")->required();
    c->add_option("--pred", pred, "Track records file")->required();
    c->add_option("--histogram", histogram, "Histogram kind")->required()->check(CLI::IsMember({"extent-size"}));
    c->add_option("--bin-width", binWidth, "Bin width in metres")->check(CLI::PositiveNumber);
    c->add_option("--class", className, "Restrict to one class");
    c->add_option("--out", out, "CSV file to write")->required();
    config.add(c);
    c->callback([this] { run_ = true; });
  }

  int run(const std::string&) const {
    RunConfig cfg = configFromJson(config.merged());
    if (!className.empty()) cfg.metrics.classFilter = parseObjectClass(className);
    const auto frames = readFramesFile(gt);
    const auto records = readTracksFile(pred);
    const auto h = tpSizeHistogram(records, frames, cfg.metrics, binWidth);
    std::ostringstream csv;
    csv << "bin_lo_m,bin_hi_m,width_count,length_count\n";
    const std::size_t n = std::max(h.width.size(), h.length.size());
    for (std::size_t b = 0; b < n; ++b) {
      const auto w = b < h.width.size() ? h.width[b] : 0;
      const auto l = b < h.length.size() ? h.length[b] : 0;
      csv << fixed(static_cast<double>(b) * binWidth, 3) << ',' << fixed(static_cast<double>(b + 1) * binWidth, 3) << ','
          << w << ',' << l << '\n';
    }
    auto f = detail::openOut(out);
    f << csv.str();
    if (!f) throw Error(ErrorCode::IoError, "failed writing '" + out + "'");
    log(LogLevel::info, "histogram of " + std::to_string(h.total) + " TP boxes written to " + out);
    return kOk;
  }

  bool run_ = false;
};

// ---- bench -------------------------------------------------------------------

struct BenchCmd {
  std::string framework, input, out;
  int repeat = 5;
  ConfigOptions config;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("bench", "Time the tracker update per frame");
    c->add_option("--framework", framework, "tbd-pot, jdt-eot or tbd-eot (overrides the config)");
    c->add_option("--input", input, "Sequence directory or frames file")->required();
    c->add_option("--repeat", repeat, "Repetitions over the sequence")->check(CLI::PositiveNumber);
    c->add_option("--out", out, "Optional JSON file for the timings");
    config.add(c);
    c->callback([this] { run_ = true; });
  }

  int run(const std::string& cmdline) const {
    Json merged = config.merged();
    if (!framework.empty()) merged["framework"] = framework;
    const RunConfig cfg = configFromJson(merged);
    const auto frames = readFramesFile(input);
    FpsResult r;
    const auto& pc = cfg.pipeline;
    switch (pc.framework) {
      case Framework::tbdPot: r = fpsBenchmark([&] { return TbdPotTracker(pc); }, frames, repeat); break;
      case Framework::jdtEot: r = fpsBenchmark([&] { return JdtEotTracker(pc); }, frames, repeat); break;
      case Framework::tbdEot: r = fpsBenchmark([&] { return TbdEotTracker(pc); }, frames, repeat); break;
    }
    std::cout << to_string(pc.framework) << ": " << fixed(r.meanFps, 1) << " fps, latency p50 " << fixed(r.p50Ms, 3)
              << " ms, p95 " << fixed(r.p95Ms, 3) << " ms, max " << fixed(r.maxMs, 3) << " ms (" << frames.size()
              << " frames x " << repeat << ")\n";
    if (!out.empty()) {
      Json j{{"schema", "radmot.bench/1"},
             {"command", cmdline},
             {"framework", to_string(pc.framework)},
             {"config_hash", configHash(merged)},
             {"frames", frames.size()},
             {"repeat", repeat},
             {"mean_fps", r.meanFps},
             {"p50_ms", r.p50Ms},
             {"p95_ms", r.p95Ms},
             {"max_ms", r.maxMs}};
      writeJsonFile(out, j);
    }
    return kOk;
  }

  bool run_ = false;
};

struct ConfigCmd {
  ConfigOptions config;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("config", "Print the merged configuration");
    config.add(c);
    c->callback([this] { run_ = true; });
  }

  int run(const std::string&) const {
    const Json merged = config.merged();
    configFromJson(merged);
    std::cout << merged.dump(2) << '\n';
    return kOk;
  }

  bool run_ = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar multi-object tracking toolkit"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);
  SimulateCmd simulateCmd;
  TrackCmd trackCmd;
  EvaluateCmd evaluateCmd;
  ReportCmd reportCmd;
  BenchCmd benchCmd;
  ConfigCmd configCmd;
  simulateCmd.add(app);
  trackCmd.add(app);
  evaluateCmd.add(app);
  reportCmd.add(app);
  benchCmd.add(app);
  configCmd.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  const std::string cmdline = commandLine(argc, argv);
  try {
    if (simulateCmd.run_) return simulateCmd.run(cmdline);
    if (trackCmd.run_) return trackCmd.run(cmdline);
    if (evaluateCmd.run_) return evaluateCmd.run(cmdline);
    if (reportCmd.run_) return reportCmd.run(cmdline);
    if (benchCmd.run_) return benchCmd.run(cmdline);
    if (configCmd.run_) return configCmd.run(cmdline);
  } catch (const Error& e) {
    log(LogLevel::error, e.what());
    return exitCodeFor(e.code());
  } catch (const std::exception& e) {
    log(LogLevel::error, std::string("internal error: ") + e.what());
    return kInternalError;
  }
  return kInternalError;
}
