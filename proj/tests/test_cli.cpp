#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "radapt/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;  // stdout and stderr
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(RADAPT_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("radapt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateGlobalNullHasNoPower) {
  const auto r = run("simulate --design preset:MappedAlpha --scenario S1 --reps 300 --seed 3 --out " + path("out"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto t = radapt::read_csv(path("out/oc_report.csv"));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.get(0, "power"), "N/A");
  EXPECT_NE(t.get(0, "type1"), "N/A");
  EXPECT_TRUE(fs::exists(path("out/adaptability.csv")));
}

TEST_F(Cli, SimulateAlternativeHasBoth) {
  const auto r = run("simulate --design preset:FixedEqual --design preset:MappedBeta --scenario S2 --reps 300 --out " +
                     path("out"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto t = radapt::read_csv(path("out/oc_report.csv"));
  ASSERT_EQ(t.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NE(t.get(i, "power"), "N/A");
    EXPECT_NE(t.get(i, "type1"), "N/A");
  }
}

TEST_F(Cli, SimulateIsDeterministic) {
  const std::string base = "simulate --design preset:ControlProtected --scenario 0,0.1,0.3 --reps 200 --seed 9";
  ASSERT_EQ(run(base + " --workers 1 --out " + path("a")).code, 0);
  ASSERT_EQ(run(base + " --workers 3 --out " + path("b")).code, 0);
  EXPECT_EQ(slurp(path("a/oc_report.csv")), slurp(path("b/oc_report.csv")));
  EXPECT_EQ(slurp(path("a/adaptability.csv")), slurp(path("b/adaptability.csv")));
}

TEST_F(Cli, SeedFallsBackToEnvironment) {
  const std::string base = "simulate --design preset:Unrestricted --scenario S4 --reps 100";
  ASSERT_EQ(run(base + " --seed 42 --out " + path("flag")).code, 0);
  ASSERT_EQ(run(base + " --out " + path("env"), "RADAPT_SEED=42").code, 0);
  ASSERT_EQ(run(base + " --out " + path("other"), "RADAPT_SEED=43").code, 0);
  EXPECT_EQ(slurp(path("flag/oc_report.csv")), slurp(path("env/oc_report.csv")));
  EXPECT_NE(slurp(path("flag/oc_report.csv")), slurp(path("other/oc_report.csv")));
  EXPECT_EQ(run(base + " --out " + path("bad"), "RADAPT_SEED=abc").code, 1);
}

TEST_F(Cli, SimulatePooled) {
  const auto r = run("simulate --design preset:StratosPHere2 --scenario S9 --pooled --reps 100 --out " + path("p"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto t = radapt::read_csv(path("p/pooled.csv"));
  EXPECT_FALSE(t.rows.empty());
}

TEST_F(Cli, SimulateOutcomeModelFlags) {
  const auto pilot = path("pilot.csv");
  radapt::write_text_file(pilot, "delta_y\n0.1\n0.4\n-0.2\n0.35\n");
  EXPECT_EQ(run("simulate --design preset:FixedEqual --scenario S2 --reps 50 --pilot " + pilot + " --out " + path("o"))
                .code,
            0);
  EXPECT_EQ(
      run("simulate --design preset:FixedEqual --scenario S2 --reps 50 --location 0.2 --out " + path("o")).code, 0);
  EXPECT_EQ(run("simulate --design preset:FixedEqual --scenario S2 --reps 50 --scale -1 --out " + path("o")).code,
            2);
}

TEST_F(Cli, MissingDesignFileNamesPath) {
  const auto missing = path("no_such_design.json");
  const auto r = run("simulate --design " + missing + " --reps 10 --out " + path("x"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find(missing), std::string::npos) << r.output;
}

TEST_F(Cli, InvalidDesignIsDataError) {
  radapt::write_text_file(path("d.json"), R"({"stages": [{"size": 6}], "tau": 0.9})");
  const auto r = run("simulate --design " + path("d.json") + " --reps 10 --out " + path("x"));
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("tau"), std::string::npos);
}

TEST_F(Cli, HelpOnEverySubcommand) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> expected{
      {"simulate", {"--design", "--scenario", "--case", "--reps", "--seed", "--workers", "--out", "--pooled"}},
      {"calibrate", {"--design", "--stage", "--grid-lo", "--grid-hi", "--grid-step", "--criterion", "--reps"}},
      {"interim", {"--design", "--data", "--stage", "--seed", "--out"}},
      {"genlist", {"--design", "--ratio", "--seed", "--out"}},
      {"report", {"--out"}},
  };
  for (const auto& [cmd, flags] : expected) {
    const auto r = run(cmd + " --help");
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto& f : flags) EXPECT_NE(r.output.find(f), std::string::npos) << cmd << " " << f;
  }
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("simulate --design preset:FixedEqual --bogus").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("simulate --design preset:FixedEqual --case 9").code, 1);
  EXPECT_EQ(run("simulate --design preset:FixedEqual --scenario 0,x,1 --out " + path("x")).code, 1);
}

TEST_F(Cli, Calibrate) {
  const auto r = run("calibrate --design preset:MappedAlpha --stage 2 --grid-lo 0.4 --grid-hi 0.5 --grid-step 0.05 "
                     "--reps 100 --out " + path("c"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto t = radapt::read_csv(path("c/tradeoff.csv"));
  EXPECT_EQ(t.rows.size(), 3u);
  EXPECT_GE(t.column("selected"), 0);
  EXPECT_EQ(run("calibrate --design preset:FixedEqual --stage 2 --reps 10 --out " + path("c")).code, 2);
}

TEST_F(Cli, Interim) {
  const auto data = path("data.csv");
  radapt::write_text_file(data, "patient_id,stage,arm_label,delta_y\n1,1,C,0.5\n2,1,C,0.1\n3,1,T1,0.4\n"
                                "4,1,T1,-0.2\n5,1,T2,0.3\n6,1,T2,0.9\n");
  auto r = run("interim --design preset:MappedAlpha --data " + data + " --stage 2 --out " + path("log.txt"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("ratio 2:2:2"), std::string::npos) << r.output;
  EXPECT_EQ(slurp(path("log.txt")), r.output);

  radapt::write_text_file(data, "patient_id,stage,arm_label,delta_y\n1,1,C,0.5\n2,1,T1,NA\n3,1,T2,0.9\n");
  r = run("interim --design preset:MappedAlpha --data " + data + " --stage 2");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("override"), std::string::npos);

  radapt::write_text_file(data, "");
  EXPECT_EQ(run("interim --design preset:MappedAlpha --data " + data + " --stage 2").code, 2);
  radapt::write_text_file(data, "patient_id,stage,arm_label,delta_y\n1,1,C,zz\n");
  r = run("interim --design preset:MappedAlpha --data " + data + " --stage 2");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(":2"), std::string::npos) << r.output;
}

TEST_F(Cli, Genlist) {
  const auto out = path("list.csv");
  auto r = run("genlist --ratio 2:2:2 --ratio 2:3:1 --ratio 2:0:6 --seed 5 --out " + out);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto t = radapt::read_csv(out);
  EXPECT_EQ(t.rows.size(), 20u);
  int t1_stage3 = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) t1_stage3 += t.get(i, "stage") == "3" && t.get(i, "arm_label") == "T1";
  EXPECT_EQ(t1_stage3, 0);
  const auto first = slurp(out);
  ASSERT_EQ(run("genlist --ratio 2:2:2 --ratio 2:3:1 --ratio 2:0:6 --seed 5 --out " + out).code, 0);
  EXPECT_EQ(slurp(out), first);
  EXPECT_EQ(run("genlist --ratio 2:2 --out " + out).code, 1);
  EXPECT_EQ(run("genlist --ratio 2:x:2 --out " + out).code, 1);
}

TEST_F(Cli, ReportMerge) {
  radapt::write_text_file(path("a.csv"), "design,power,type1\nA,0.7,0.1\n");
  radapt::write_text_file(path("b.csv"), "design,power,reject_any\nB,0.8,0.2\n");
  const auto r = run("report " + path("a.csv") + " " + path("b.csv") + " --out " + path("m.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto t = radapt::read_csv(path("m.csv"));
  EXPECT_EQ(t.header, (std::vector<std::string>{"design", "power", "type1", "reject_any"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.get(0, "reject_any"), "");
  EXPECT_EQ(t.get(1, "design"), "B");

  radapt::write_text_file(path("empty.csv"), "");
  EXPECT_EQ(run("report " + path("empty.csv")).code, 2);
  EXPECT_EQ(run("report").code, 1);
}

TEST_F(Cli, ShippedDesignFilesLoad) {
  const auto r = run(std::string("simulate --design ") + RADAPT_SOURCE_DIR + "/designs/MappedAlpha.json --scenario S1"
                     " --reps 50 --out " + path("s"));
  EXPECT_EQ(r.code, 0) << r.output;
}
