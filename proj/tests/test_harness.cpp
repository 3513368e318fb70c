#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "rattleback/ec_map.hpp"
#include "rattleback/heteroclinic.hpp"
#include "rattleback/manifest.hpp"
#include "rattleback/plot.hpp"

namespace rb = rattleback;
namespace fs = std::filesystem;
using rb::Vec3;

namespace {

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh RATTLEBACK_RUNS_DIR per test.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / ("rattleback_test_" + std::string(info->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    setenv("RATTLEBACK_RUNS_DIR", (root_ / "runs").c_str(), 1);
  }
  void TearDown() override {
    unsetenv("RATTLEBACK_RUNS_DIR");
    fs::remove_all(root_);
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "rattleback");
    out_.str("");
    err_.str("");
    return rb::cli::run(args, out_, err_);
  }

  /// The run directory reported by the last command.
  fs::path last_run() const {
    const std::string e = err_.str();
    const std::string key = "run directory: ";
    const auto pos = e.rfind(key);
    if (pos == std::string::npos) return {};
    return e.substr(pos + key.size(), e.find('\n', pos) - pos - key.size());
  }

  fs::path root_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST(Manifest, Sha256KnownVectors) {
  EXPECT_EQ(rb::sha256_bytes("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(rb::sha256_bytes(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Manifest, Timestamp) {
  using namespace std::chrono;
  EXPECT_EQ(rb::iso_timestamp(system_clock::time_point{}), "1970-01-01T00:00:00.000Z");
  EXPECT_EQ(rb::iso_timestamp(system_clock::time_point{milliseconds(1700000000123)}),
            "2023-11-14T22:13:20.123Z");
}

TEST(Manifest, JsonRoundTrip) {
  rb::RunManifest m{"stabilize", {{"lambda", "2"}, {"seed", "7"}}, "2026-01-02T03:04:05.006Z", "1.2.3",
                    {"a.csv", "b.svg"}, {"00", "ff"}};
  const rb::RunManifest back = rb::manifest_from_json(rb::manifest_to_json(m));
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.parameters, m.parameters);
  EXPECT_EQ(back.timestamp, m.timestamp);
  EXPECT_EQ(back.tool_version, m.tool_version);
  EXPECT_EQ(back.output_files, m.output_files);
  EXPECT_EQ(back.checksums, m.checksums);
  EXPECT_THROW(rb::manifest_from_json("{}"), rb::Error);
}

TEST_F(CliTest, RunDirectoriesAreUniqueAndVerified) {
  rb::RunDirectory a("probe", {{"k", "v"}});
  rb::RunDirectory b("probe", {{"k", "v"}});
  EXPECT_NE(a.path(), b.path());
  EXPECT_EQ(a.path().parent_path(), root_ / "runs");
  EXPECT_TRUE(std::regex_match(a.path().filename().string(),
                               std::regex(R"(\d{8}T\d{6}\.\d{3}Z-probe(-\d+)?)")));
  a.write("x.txt", "abc");
  const auto m = a.finish();
  ASSERT_EQ(m.checksums.size(), 1u);
  EXPECT_EQ(m.checksums[0], rb::sha256_bytes("abc"));
  auto checks = rb::verify_run(a.path());
  ASSERT_EQ(checks.size(), 1u);
  EXPECT_TRUE(checks[0].ok());
  std::ofstream(a.path() / "x.txt") << "abd";
  checks = rb::verify_run(a.path());
  EXPECT_FALSE(checks[0].ok());
}

TEST(Plot, EmptySeries) {
  try {
    rb::emit_svg({rb::Projection::XY, {}, {}});
    FAIL();
  } catch (const rb::Error& e) {
    EXPECT_EQ(e.code(), rb::ErrorCode::EmptySeries);
  }
  EXPECT_THROW(rb::emit_svg({rb::Projection::XY, {{"none", {}, false}}, {}}), rb::Error);
}

TEST(Plot, ParseProjection) {
  EXPECT_EQ(rb::parse_projection("xy"), rb::Projection::XY);
  EXPECT_EQ(rb::parse_projection("XZ"), rb::Projection::XZ);
  EXPECT_EQ(rb::parse_projection("yz"), rb::Projection::YZ);
  EXPECT_THROW(rb::parse_projection("xx"), rb::Error);
}

TEST(Plot, FiberTraceGivesTwoClosedCurves) {
  const rb::ModelParams p(2);
  const auto trace = rb::trace_fiber({1, 1.5}, p);
  rb::PlotSpec plot{rb::Projection::XY, {}, {}};
  for (const auto& c : trace.components) plot.series.push_back({"c", c, true});
  const std::string svg = rb::emit_svg(plot);
  EXPECT_NE(svg.find("width=\"800\" height=\"800\""), std::string::npos);
  std::size_t polygons = 0;
  for (auto pos = svg.find("<polygon"); pos != std::string::npos; pos = svg.find("<polygon", pos + 1)) ++polygons;
  EXPECT_EQ(polygons, 2u);
  EXPECT_EQ(svg.find("<polyline"), std::string::npos);
  // Every coordinate carries exactly two decimals.
  const auto start = svg.find("points=\"") + 8;
  const std::string pts = svg.substr(start, svg.find('"', start) - start);
  const std::regex number(R"(-?\d+\.\d{2})");
  std::istringstream tokens(pts);
  std::string pair;
  std::size_t n = 0;
  while (tokens >> pair) {
    const auto comma = pair.find(',');
    ASSERT_NE(comma, std::string::npos);
    EXPECT_TRUE(std::regex_match(pair.substr(0, comma), number)) << pair;
    EXPECT_TRUE(std::regex_match(pair.substr(comma + 1), number)) << pair;
    ++n;
  }
  EXPECT_EQ(n, trace.components[0].size());
  EXPECT_EQ(svg, rb::emit_svg(plot));
}

TEST(Plot, HeteroclinicArcsJoinThePoles) {
  const rb::ModelParams p(2);
  rb::PlotSpec plot{rb::Projection::YZ, {}, rb::PlotBounds{-1.5, 1.5, -1.5, 1.5}};
  for (auto b : rb::kAllBranches) {
    rb::Series s{std::string(rb::to_string(b)), {}, false};
    for (int i = 0; i <= 400; ++i) s.points.push_back(rb::het_state(b, {1, 0}, p, -20 + 0.1 * i));
    plot.series.push_back(s);
  }
  const std::string svg = rb::emit_svg(plot);
  // With bounds [-1.5, 1.5]^2 on a 680 px frame at offset 60, (y, z) = (0, +-1)
  // lands on (400, 173.33) and (400, 626.67).
  std::regex poly(R"re(points="([^"]*)")re");
  int arcs = 0;
  for (std::sregex_iterator it(svg.begin(), svg.end(), poly), end; it != end; ++it) {
    const std::string pts = (*it)[1];
    const std::string first = pts.substr(0, pts.find(' '));
    const std::string last = pts.substr(pts.rfind(' ') + 1);
    const bool up = first == "400.00,626.67" && last == "400.00,173.33";
    const bool down = first == "400.00,173.33" && last == "400.00,626.67";
    EXPECT_TRUE(up || down) << first << " .. " << last;
    ++arcs;
  }
  EXPECT_EQ(arcs, 4);
}

TEST_F(CliTest, ClassifyExamples) {
  EXPECT_EQ(run({"classify", "--lambda", "2", "--h", "1", "--c", "1.5"}), 0);
  EXPECT_NE(out_.str().find("\"stratum\":\"SigmaPPlus\""), std::string::npos) << out_.str();
  EXPECT_NE(out_.str().find("\"fiber_topology\":\"TwoCircles\""), std::string::npos);
  const auto checks = rb::verify_run(last_run());
  ASSERT_EQ(checks.size(), 1u);
  EXPECT_EQ(checks[0].file, "classify.json");
  EXPECT_EQ(run({"classify", "--lambda", "2", "--h", "3", "--c", "1.5"}), 0);
  EXPECT_NE(out_.str().find("\"stratum\":\"Outside\""), std::string::npos);
}

TEST_F(CliTest, IntegerLambdaGate) {
  EXPECT_EQ(run({"simulate", "--lambda", "0.5", "--from", "1,1,1", "--t-end", "1"}), 0);
  EXPECT_EQ(run({"classify", "--lambda", "0.5", "--h", "1", "--c", "1"}), 2);
  EXPECT_NE(err_.str().find("--lambda"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsAreOneLineAndNameTheFlag) {
  const std::vector<std::pair<std::vector<std::string>, std::string>> cases = {
      {{"classify", "--lambda", "2", "--h", "1"}, "--c"},
      {{"simulate", "--lambda", "x", "--from", "1,1,1"}, "--lambda"},
      {{"simulate", "--lambda", "2", "--from", "1,1"}, "--from"},
      {{"simulate", "--lambda", "2", "--from", "1,1,1", "--projection", "ab"}, "--projection"},
      {{"stabilize", "--kind", "heteroclinic", "--lambda", "2", "--seed", "1"}, "--M"},
      {{"stabilize", "--kind", "periodic-orbit", "--lambda", "2", "--c", "1.5", "--seed", "1"}, "--h"},
      {{"stabilize", "--kind", "nope", "--lambda", "2", "--seed", "1"}, "--kind"},
      {{"stabilize", "--kind", "heteroclinic", "--lambda", "2", "--M", "1"}, "--seed"},
      {{"sweep", "--kind", "heteroclinic", "--lambda", "2", "--M", "1", "--epsilons", "1,a", "--seeds", "1"},
       "--epsilons"}};
  for (const auto& [args, flag] : cases) {
    EXPECT_EQ(run(args), 2) << args[0];
    const std::string e = err_.str();
    EXPECT_EQ(std::count(e.begin(), e.end(), '\n'), 1) << e;
    EXPECT_NE(e.find(flag), std::string::npos) << e;
  }
}

TEST_F(CliTest, NumericalFailureExitsThree) {
  EXPECT_EQ(run({"simulate", "--lambda", "2", "--from", "1e200,1,1", "--dt", "0.1", "--t-end", "100"}), 3);
}

TEST_F(CliTest, ConfigFileAndOverrides) {
  const fs::path cfg = root_ / "run.cfg";
  std::ofstream(cfg) << "kind = heteroclinic\nlambda=2\nM=1\nseed=5\nt-end=5\nepsilon=0.5\n";
  ASSERT_EQ(run({"stabilize", "--config", cfg.string()}), 0) << err_.str();
  auto m = rb::manifest_from_json(slurp(last_run() / "manifest.json"));
  EXPECT_EQ(m.parameters["t-end"], "5");
  EXPECT_EQ(m.parameters["epsilon"], "0.5");
  ASSERT_EQ(run({"stabilize", "--config", cfg.string(), "--t-end", "2"}), 0);
  m = rb::manifest_from_json(slurp(last_run() / "manifest.json"));
  EXPECT_EQ(m.parameters["t-end"], "2");
  EXPECT_EQ(m.parameters["seed"], "5");
  EXPECT_EQ(run({"stabilize", "--config", (root_ / "missing.cfg").string()}), 2);
}

TEST_F(CliTest, StabilizeSummary) {
  ASSERT_EQ(run({"stabilize", "--kind", "heteroclinic", "--lambda", "2", "--M", "1", "--seed", "3",
                 "--t-end", "50"}),
            0);
  const std::string summary = slurp(last_run() / "summary.json");
  for (const char* key : {"\"final_distance\"", "\"monotone_violations\": 0", "\"casimir_drift\""}) {
    EXPECT_NE(summary.find(key), std::string::npos) << key;
  }
  EXPECT_EQ(slurp(last_run() / "convergence.csv").rfind("t,dist_to_target,lyapunov\n", 0), 0u);
}

TEST_F(CliTest, SweepMatchesSingleRuns) {
  ASSERT_EQ(run({"sweep", "--kind", "equilibria-minus", "--lambda", "2", "--M", "1", "--epsilons", "0.5,2",
                 "--seeds", "4,9", "--t-end", "20", "--threads", "3"}),
            0);
  std::istringstream rows(slurp(last_run() / "sweep.csv"));
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "epsilon,seed,status,final_distance,monotone_violations,casimir_drift");
  std::vector<std::string> lines;
  while (std::getline(rows, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[3].rfind("2,9,ok,", 0), 0u);
  // The same task run on its own gives the same digits.
  ASSERT_EQ(run({"stabilize", "--kind", "equilibria-minus", "--lambda", "2", "--M", "1", "--epsilon", "2",
                 "--seed", "9", "--t-end", "20"}),
            0);
  const std::string summary = slurp(last_run() / "summary.json");
  const std::string dist = lines[3].substr(7, lines[3].find(',', 7) - 7);
  EXPECT_NEAR(std::stod(dist), std::stod(summary.substr(summary.find("\"final_distance\": ") + 18)), 0.0);
}

TEST_F(CliTest, LaxCheckReadsTrajectory) {
  ASSERT_EQ(run({"simulate", "--lambda", "3", "--from", "0.4,0.8,-0.3", "--t-end", "20"}), 0);
  const fs::path traj = last_run() / "trajectory.csv";
  ASSERT_EQ(run({"lax-check", "--lambda", "3", "--trajectory", traj.string()}), 0);
  EXPECT_NE(out_.str().find("samples: 2001"), std::string::npos) << out_.str();
  const auto m = rb::manifest_from_json(slurp(last_run() / "manifest.json"));
  EXPECT_EQ(m.parameters.at("trajectory_sha256"), rb::sha256_file(traj));
}

TEST_F(CliTest, ReportDetectsTampering) {
  ASSERT_EQ(run({"fiber", "--lambda", "2", "--h", "1", "--c", "1.5"}), 0);
  const fs::path dir = last_run();
  EXPECT_EQ(run({"report", "--run", dir.string()}), 0);
  {
    std::ofstream f(dir / "fiber.csv", std::ios::app);
    f << "0,0,0,0,0\n";
  }
  EXPECT_EQ(run({"report", "--run", dir.string()}), 1);
  EXPECT_NE(out_.str().find("MISMATCH fiber.csv"), std::string::npos);
  fs::remove(dir / "fiber.svg");
  EXPECT_EQ(run({"report", "--run", dir.string()}), 1);
  EXPECT_NE(out_.str().find("MISSING fiber.svg"), std::string::npos);
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  const std::vector<std::vector<std::string>> commands = {
      {"simulate", "--lambda", "2", "--from", "1,0.5,0.2", "--t-end", "5"},
      {"fiber", "--lambda", "3", "--h", "0.5", "--c", "1"},
      {"heteroclinic", "--lambda", "2", "--M", "1.5"},
      {"stabilize", "--kind", "periodic-orbit", "--lambda", "2", "--h", "1", "--c", "1.5", "--seed", "11",
       "--t-end", "20"},
      {"sweep", "--kind", "heteroclinic", "--lambda", "2", "--M", "1", "--epsilons", "1", "--seeds", "1,2",
       "--t-end", "10"}};
  for (const auto& cmd : commands) {
    ASSERT_EQ(run(cmd), 0) << cmd[0] << ": " << err_.str();
    const fs::path a = last_run();
    ASSERT_EQ(run(cmd), 0);
    const fs::path b = last_run();
    ASSERT_NE(a, b);
    const auto ma = rb::manifest_from_json(slurp(a / "manifest.json"));
    const auto mb = rb::manifest_from_json(slurp(b / "manifest.json"));
    EXPECT_EQ(ma.output_files, mb.output_files);
    EXPECT_EQ(ma.checksums, mb.checksums) << cmd[0];
    for (const auto& f : ma.output_files) EXPECT_EQ(slurp(a / f), slurp(b / f)) << cmd[0] << " " << f;
  }
}
