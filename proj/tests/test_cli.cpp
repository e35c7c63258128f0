#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "slmlab/report.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SLMLAB_BIN) + " " + args + " -q >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fresh_dir(const std::string& name) {
  const auto d = (fs::temp_directory_path() / ("slmlab_cli_" + name)).string();
  fs::remove_all(d);
  return d;
}

const std::string smoke = std::string("--config ") + SLMLAB_CONFIGS + "/smoke.cfg";

}  // namespace

TEST(Cli, SameSeedGivesIdenticalCsvBodies) {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  ASSERT_EQ(run("full-report " + smoke + " --out " + a), 0);
  ASSERT_EQ(run("full-report " + smoke + " --out " + b), 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    const auto other = fs::path(b) / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slm::csv_body(e.path().string()), slm::csv_body(other.string())) << e.path();
    ++compared;
  }
  EXPECT_GE(compared, 5);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, DifferentSeedChangesResults) {
  const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
  ASSERT_EQ(run("simulate " + smoke + " --out " + a), 0);
  ASSERT_EQ(run("simulate " + smoke + " --seed 6 --out " + b), 0);
  EXPECT_NE(slm::csv_body(a + "/simulate.csv"), slm::csv_body(b + "/simulate.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, MalformedConfigExitsWithTwo) {
  const auto d = fresh_dir("bad");
  EXPECT_EQ(run(std::string("simulate --config ") + SLMLAB_CONFIGS + "/malformed_missing_x0.cfg --out " + d), 2);
  EXPECT_EQ(run("simulate --config /nonexistent.cfg --out " + d), 2);
  EXPECT_EQ(run("teleport " + smoke), 2);
  EXPECT_EQ(run("simulate"), 2);
  EXPECT_FALSE(fs::exists(d));
}

TEST(Cli, RefusesToMixConfigHashesInOneDirectory) {
  const auto d = fresh_dir("mix");
  ASSERT_EQ(run("simulate " + smoke + " --out " + d), 0);
  EXPECT_EQ(run("simulate " + smoke + " --out " + d), 0);  // same hash: fine
  EXPECT_EQ(run("simulate " + smoke + " --seed 99 --out " + d), 2);
  fs::remove_all(d);
}

TEST(Cli, FullReportCheckWritesTheCheckTable) {
  const auto d = fresh_dir("check");
  ASSERT_EQ(run("full-report " + smoke + " --check --out " + d), 0);
  std::ifstream in(d + "/check.csv");
  ASSERT_TRUE(in);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# config_hash=", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "check,value,target,tolerance,pass");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_NE(line.find(",true"), std::string::npos) << line;
  }
  EXPECT_GT(rows, 5);
  fs::remove_all(d);
}

TEST(Cli, FailedChecksExitWithFour) {
  // Demand an impossible gap from the smoke run.
  const auto d = fresh_dir("fail");
  const auto cfg = d + ".cfg";
  {
    std::ifstream src(std::string(SLMLAB_CONFIGS) + "/smoke.cfg");
    std::ofstream dst(cfg);
    std::string line;
    while (std::getline(src, line)) {
      dst << line << "\n";
      if (line == "[check]") dst << "gap = 5.0\n";
    }
  }
  EXPECT_EQ(run("full-report --config " + cfg + " --check --out " + d), 4);
  EXPECT_EQ(run("full-report --config " + cfg + " --out " + d), 0);
  fs::remove_all(d);
  fs::remove(cfg);
}
