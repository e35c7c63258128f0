#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "slmlab/config.hpp"
#include "slmlab/errors.hpp"
#include "slmlab/experiment.hpp"
#include "slmlab/report.hpp"

using namespace slm;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kBase = R"(
[model]
name = inverse_bessel
x0 = 1.0

[run]
n_steps = 100
n_paths = 1000
seed = 3
ladder = 2, 4
)";

}  // namespace

TEST(Config, ParsesSectionsListsAndComments) {
  const auto c = Config::parse(R"(
# leading comment
[run]
n = 5        ; trailing comment
xs = 1, 2.5, -3e2
name = "quoted # not a comment"
flag = yes
[model:a]
name = gbm
)");
  EXPECT_EQ(c.sections(), (std::vector<std::string>{"run", "model:a"}));
  EXPECT_EQ(c.get_int("run", "n"), 5);
  EXPECT_EQ(c.get_doubles("run", "xs"), (std::vector<double>{1, 2.5, -300}));
  EXPECT_EQ(c.get_string("run", "name"), "quoted # not a comment");
  EXPECT_TRUE(c.get_bool("run", "flag", false));
  EXPECT_EQ(c.get_string("model:a", "name"), "gbm");
  EXPECT_EQ(c.get_double("run", "missing", 7.5), 7.5);
}

TEST(Config, ParseErrorsCarryTheLine) {
  EXPECT_NE(error_of([] { Config::parse("[run]\nn = 1\nbroken line\n", "f.cfg"); }).find("f.cfg:3:"),
            std::string::npos);
  EXPECT_NE(error_of([] { Config::parse("n = 1\n", "f.cfg"); }).find("f.cfg:1:"), std::string::npos);
  EXPECT_NE(error_of([] { Config::parse("[run\n", "f.cfg"); }).find("f.cfg:1:"), std::string::npos);
  const auto dup = error_of([] { Config::parse("[run]\nn = 1\n\nn = 2\n", "f.cfg"); });
  EXPECT_NE(dup.find("f.cfg:4:"), std::string::npos);
  EXPECT_NE(dup.find("duplicate"), std::string::npos);
  EXPECT_NE(error_of([] { Config::parse("[run]\nn =\n", "f.cfg"); }).find("f.cfg:2:"), std::string::npos);
}

TEST(Config, TypedGettersReportTheField) {
  const auto c = Config::parse("[run]\nn = 1.5\nxs = 1, two\n", "f.cfg");
  EXPECT_NE(error_of([&] { c.get_int("run", "n"); }).find("f.cfg:2:"), std::string::npos);
  EXPECT_NE(error_of([&] { c.get_doubles("run", "xs"); }).find("'two'"), std::string::npos);
  EXPECT_NE(error_of([&] { c.get_double("run", "absent"); }).find("missing field 'run.absent'"),
            std::string::npos);
  EXPECT_NE(error_of([&] { c.require_known("run", {"n"}); }).find("unknown field 'run.xs'"),
            std::string::npos);
}

TEST(Config, HashIgnoresFormattingButNotValues) {
  const auto a = Config::parse("[run]\nb = 2\na = 1, 2\n[model]\nname = gbm\n");
  const auto b = Config::parse("# comment\n[model]\nname=gbm\n\n[run]\na = 1,2\nb=2  \n");
  const auto c = Config::parse("[run]\nb = 3\na = 1, 2\n[model]\nname = gbm\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  // FNV-1a 64 reference values.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Experiment, LoadsAndAppliesOverrides) {
  const auto e = load_experiment(Config::parse(kBase));
  EXPECT_EQ(e.model.name, "inverse_bessel");
  EXPECT_EQ(e.simulation.n_paths, 1000);
  EXPECT_EQ(e.simulation.seed, 3u);
  EXPECT_EQ(e.simulation.ladder, (std::vector<double>{2, 4}));
  Overrides ov;
  ov.seed = 9;
  ov.paths = 50;
  ov.steps = 40;
  const auto o = load_experiment(Config::parse(kBase), ov);
  EXPECT_EQ(o.simulation.seed, 9u);
  EXPECT_EQ(o.simulation.n_paths, 50);
  EXPECT_EQ(o.simulation.n_steps, 40);
  EXPECT_NE(o.hash, e.hash);
}

TEST(Experiment, OutputDirectoryDoesNotChangeTheHash) {
  Overrides ov;
  ov.out = "/tmp/elsewhere";
  const auto a = load_experiment(Config::parse(kBase));
  const auto b = load_experiment(Config::parse(kBase), ov);
  EXPECT_EQ(b.out_dir, "/tmp/elsewhere");
  EXPECT_EQ(a.hash, b.hash);
}

TEST(Experiment, MissingStartingPointIsReported) {
  const auto msg = error_of([] { load_experiment_file(SLMLAB_CONFIGS "/malformed_missing_x0.cfg"); });
  EXPECT_NE(msg.find("missing field 'model.x0'"), std::string::npos) << msg;
}

TEST(Experiment, UnknownKeysAndSectionsAreErrors) {
  EXPECT_NE(error_of([] { load_experiment(Config::parse(std::string(kBase) + "[run2]\nx = 1\n")); })
                .find("unknown section"),
            std::string::npos);
  EXPECT_NE(error_of([] { load_experiment(Config::parse(std::string(kBase) + "n_pathz = 5\n")); })
                .find("unknown field 'run.n_pathz'"),
            std::string::npos);
  EXPECT_THROW(load_experiment(Config::parse("[run]\nn_paths = 5\n")), ConfigError);
}

TEST(Experiment, ShippedConfigsLoad) {
  for (const char* name : {"inverse_bessel_gap.cfg", "gbm_collapse.cfg", "classifier_suite.cfg", "smoke.cfg"}) {
    const auto e = load_experiment_file(std::string(SLMLAB_CONFIGS) + "/" + name);
    EXPECT_EQ(e.hash.size(), 16u) << name;
    EXPECT_NO_THROW(e.build_model()) << name;
  }
}

TEST(Report, WritersStampTheHashAndRefuseMixing) {
  const auto dir = (std::filesystem::temp_directory_path() / "slm_report_test").string();
  std::filesystem::remove_all(dir);
  ReportWriter w(dir, "aaaaaaaaaaaaaaaa", {"csv", "json", "plotdata"});
  CsvTable t{{"x", "y"}, {}};
  t.add(1.0, 2L);
  t.add(0.1, true);
  w.csv("t.csv", t);
  w.json("t.json", {{"k", 1}}, 5, 0.1);
  w.plotdata("t.dat", {{1.0, 2.0}});
  EXPECT_EQ(w.written().size(), 3u);
  EXPECT_EQ(file_config_hash(dir + "/t.csv"), "aaaaaaaaaaaaaaaa");
  EXPECT_EQ(file_config_hash(dir + "/t.json"), "aaaaaaaaaaaaaaaa");
  EXPECT_EQ(file_config_hash(dir + "/t.dat"), "aaaaaaaaaaaaaaaa");
  EXPECT_EQ(csv_body(dir + "/t.csv"), "x,y\n1,2\n0.1,true\n");
  ReportWriter other(dir, "bbbbbbbbbbbbbbbb", {"csv"});
  EXPECT_THROW(other.csv("u.csv", t), ConfigError);
  EXPECT_THROW(ReportWriter(dir, "a", {"xml"}), ConfigError);
  CsvTable bad{{"x"}, {}};
  bad.add(1.0, 2.0);
  EXPECT_THROW(w.csv("bad.csv", bad), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Report, NumberFormatting) {
  EXPECT_EQ(fmt(0.1), "0.1");
  EXPECT_EQ(fmt(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(fmt(-0.0), "-0");
  EXPECT_EQ(fmt(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(fmt(std::nan("")), "nan");
}
