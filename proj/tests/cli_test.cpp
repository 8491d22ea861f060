#include "metricproj/instance.hpp"
#include "metricproj/io.hpp"

#include "oracle/dense_reference.hpp"
#include "support/process.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace metricproj {
namespace {

namespace fs = std::filesystem;
using testing::field;
using testing::run_cli;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("metricproj_cli_" + std::to_string(getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_file(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  std::string random_instance_file(Index n, std::uint32_t seed) const {
    save_instance(oracle::random_instance(n, seed), path("inst.txt"));
    return path("inst.txt");
  }

  fs::path dir_;
};

TEST_F(CliTest, BuildOnPathGraph) {
  const auto edges = write_file("path.txt", "1 2\n2 3\n");
  const auto r = run_cli("build --graph " + edges + " --out " + path("out.inst"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto inst = load_instance(path("out.inst"));
  EXPECT_EQ(inst.n(), 3);
  EXPECT_EQ(inst.pairs(), 3);
  EXPECT_EQ(inst.epsilon(), 0.2);
}

TEST_F(CliTest, BuildUsesLargerComponent) {
  const auto edges = write_file("toy.txt", "1 2\n2 3\n4 5\n5 6\n6 7\n7 8\n");
  const auto r = run_cli("build --graph " + edges + " --out " + path("out.inst") + " --offset 0.05 --epsilon 0.5");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto inst = load_instance(path("out.inst"));
  EXPECT_EQ(inst.n(), 5);
  EXPECT_EQ(inst.epsilon(), 0.5);
  EXPECT_GE(inst.w().minCoeff(), 0.05);
}

TEST_F(CliTest, BuildReportsBadInput) {
  const auto edges = write_file("bad.txt", "1 2\nfoo bar\n");
  const auto r = run_cli("build --graph " + edges + " --out " + path("out.inst"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("bad.txt:2:"), std::string::npos) << r.output;
  EXPECT_EQ(run_cli("build --graph " + path("missing.txt") + " --out " + path("o")).exit_code, 2);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli("").exit_code, 1);
  EXPECT_EQ(run_cli("solve").exit_code, 1);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli("solve --instance x --workers 0").exit_code, 1);
  EXPECT_EQ(run_cli("solve --instance x --passes 3 --tol-gap 1e-3").exit_code, 1);
  EXPECT_EQ(run_cli("--help").exit_code, 0);
}

TEST_F(CliTest, FixedPassSolve) {
  const auto inst = random_instance_file(15, 3);
  const auto r = run_cli("solve --instance " + inst + " --passes 20 --tile 40 --workers 2 --out " + path("sol.txt") +
                         " --stats " + path("stats.jsonl"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(field(r.output, "passes"), "20");
  EXPECT_EQ(field(r.output, "steps"), "31500");
  EXPECT_NE(field(r.output, "gap"), "");
  EXPECT_NE(field(r.output, "wall_time"), "");

  std::ifstream stats(path("stats.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(stats, line)) {
    const auto s = stats_from_json(nlohmann::json::parse(line));
    EXPECT_EQ(s.pass_index, ++lines);
    EXPECT_EQ(s.steps, 1575u);
  }
  EXPECT_EQ(lines, 20);

  std::ifstream sol_in(path("sol.txt"));
  const auto sol = read_solution(sol_in);
  EXPECT_EQ(sol.n, 15);
}

TEST_F(CliTest, ToleranceSolveConverges) {
  const auto inst = random_instance_file(30, 4);
  const auto r = run_cli("solve --instance " + inst + " --tol-gap 1e-4 --tol-viol 1e-4 --max-passes 5000 --tile 5");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(field(r.output, "converged"), "true") << r.output;
  EXPECT_LE(std::stod(field(r.output, "max_violation")), 1e-4);
}

TEST_F(CliTest, SolveIsDeterministic) {
  const auto inst = random_instance_file(12, 5);
  const std::string args = "solve --instance " + inst + " --passes 7 --workers 3 --tile 2 --schedule diagonal --out ";
  ASSERT_EQ(run_cli(args + path("a.txt")).exit_code, 0);
  ASSERT_EQ(run_cli(args + path("b.txt")).exit_code, 0);
  std::stringstream a, b;
  a << std::ifstream(path("a.txt")).rdbuf();
  b << std::ifstream(path("b.txt")).rdbuf();
  EXPECT_EQ(a.str(), b.str());
}

TEST_F(CliTest, SolveRejectsMalformedInstance) {
  const auto inst = write_file("bad.inst", "metricinst 1 4 0.2\n1 2 0 1\n");
  const auto r = run_cli("solve --instance " + inst + " --passes 1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("expected 6 pair rows, found 1"), std::string::npos) << r.output;
}

TEST_F(CliTest, BenchTable) {
  const auto inst = random_instance_file(20, 6);
  const auto r = run_cli("bench --instance " + inst + " --workers 1,2,4 --tile 5 --passes 2 --out " + path("b.json"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  nlohmann::json report;
  std::ifstream(path("b.json")) >> report;
  ASSERT_EQ(report["rows"].size(), 3u);
  EXPECT_EQ(report["n"], 20);
  EXPECT_EQ(report["rows"][0]["workers"], 1);
  EXPECT_DOUBLE_EQ(report["rows"][0]["speedup"].get<double>(), 1.0);
  for (const auto& row : report["rows"]) {
    EXPECT_EQ(row["passes"], 2);
    EXPECT_GT(row["seconds"].get<double>(), 0.0);
  }
}

TEST_F(CliTest, BenchAddsBaselineAndSweepsTiles) {
  const auto inst = random_instance_file(14, 7);
  const auto r = run_cli("bench --instance " + inst + " --workers 2 --tile 5,10 --passes 1 --out " + path("b.json"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  nlohmann::json report;
  std::ifstream(path("b.json")) >> report;
  ASSERT_EQ(report["rows"].size(), 4u);
  EXPECT_EQ(report["rows"][2]["tile_size"], 10);
  EXPECT_EQ(report["rows"][2]["workers"], 1);
}

TEST_F(CliTest, ScheduleDumpForTwelve) {
  const auto r = run_cli("schedule --n 12 --workers 3");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string expected =
      "round 1: S_{1,12} -> worker 1\n"
      "round 1: S_{2,11} -> worker 2\n"
      "round 1: S_{3,10} -> worker 0\n"
      "round 1: S_{4,9} -> worker 1\n"
      "round 1: S_{5,8} -> worker 2\n";
  EXPECT_EQ(r.output.substr(0, expected.size()), expected);
}

TEST_F(CliTest, ScheduleDumpForFive) {
  const auto r = run_cli("schedule --n 5");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.output,
            "round 1: S_{1,5} -> worker 0\n"
            "round 1: S_{2,4} -> worker 0\n"
            "round 2: S_{1,4} -> worker 0\n"
            "round 3: S_{1,3} -> worker 0\n"
            "round 4: S_{2,5} -> worker 0\n"
            "round 5: S_{3,5} -> worker 0\n");
}

TEST_F(CliTest, ScheduleVerify) {
  const auto r = run_cli("schedule --n 40 --tile 5 --workers 4 --verify");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("verify: ok"), std::string::npos);
  EXPECT_NE(r.output.find("tile(1,40) {S_{1,40}"), std::string::npos);
  EXPECT_EQ(run_cli("schedule --n 2").exit_code, 1);
}

}  // namespace
}  // namespace metricproj
