#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "slmlab/errors.hpp"
#include "slmlab/numerics.hpp"
#include "slmlab/sde_engine.hpp"

using namespace slm;

namespace {

DiffusionModel inverse_bessel(double x0 = 1.0) {
  ParamMap p;
  p.set("x0", x0);
  return make_builtin_model("inverse_bessel", p);
}

SimulationSettings settings(long paths, int steps, std::uint64_t seed = 7) {
  SimulationSettings s;
  s.n_paths = paths;
  s.n_steps = steps;
  s.seed = seed;
  return s;
}

double terminal_mean(const PathBatch& b) {
  return b.states[0].col(b.n_store()).mean();
}

}  // namespace

TEST(Simulate, ExactSamplerMatchesClosedFormMean) {
  auto s = settings(200000, 10);
  const auto b = simulate(inverse_bessel(), s);
  EXPECT_EQ(b->scheme, "exact_bessel3");
  for (int k : {2, 5, 10}) {
    const Estimate e = mean_and_se(b->states[0].col(k));
    EXPECT_NEAR(e.value, inverse_bessel_mean(1.0, b->times[k]), 4 * e.se) << "k = " << k;
  }
}

TEST(Simulate, EulerTracksClosedFormMean) {
  auto s = settings(50000, 1000);
  s.scheme = "euler";
  s.store_steps = 10;
  const auto b = simulate(inverse_bessel(), s);
  EXPECT_EQ(b->scheme, "euler");
  const Estimate e = mean_and_se(b->states[0].col(10));
  // Euler bias at dt = 1e-3 is well below this band.
  EXPECT_NEAR(e.value, inverse_bessel_mean(1.0, 1.0), 4 * e.se + 0.01);
}

TEST(Simulate, SeedDeterminesEveryPath) {
  auto s = settings(500, 50);
  s.ladder = {2.0, 4.0};
  const auto a = simulate(inverse_bessel(), s);
  const auto b = simulate(inverse_bessel(), s);
  EXPECT_EQ(a->states[0], b->states[0]);
  EXPECT_EQ(a->exit_step, b->exit_step);
  s.seed = 8;
  const auto c = simulate(inverse_bessel(), s);
  EXPECT_NE(a->states[0], c->states[0]);
}

TEST(Simulate, WorkerCountDoesNotChangeResults) {
  for (const char* scheme : {"euler", "exact"}) {
    auto s = settings(1001, 40);
    s.scheme = scheme;
    s.ladder = {3.0};
    s.workers = 1;
    const auto one = simulate(inverse_bessel(), s);
    s.workers = 3;
    const auto three = simulate(inverse_bessel(), s);
    EXPECT_EQ(one->states[0], three->states[0]) << scheme;
    EXPECT_EQ(one->sup_sum, three->sup_sum) << scheme;
    EXPECT_EQ(one->exit_step, three->exit_step) << scheme;
  }
}

TEST(Simulate, PathsAreAPrefixProperty) {
  // Path p's stream depends only on (seed, p): growing the batch keeps old paths.
  auto s = settings(100, 20);
  const auto small = simulate(inverse_bessel(), s);
  s.n_paths = 300;
  const auto big = simulate(inverse_bessel(), s);
  EXPECT_EQ(small->states[0], big->states[0].topRows(100));
}

TEST(Simulate, StatesStayPositive) {
  ParamMap p;
  p.set("x0", 1.0);
  p.set("beta", 1.7);
  auto s = settings(2000, 200);
  const auto b = simulate(make_builtin_model("cev", p), s);
  EXPECT_EQ(b->scheme, "euler");
  EXPECT_GT(b->states[0].minCoeff(), 0.0);
  EXPECT_TRUE(b->states[0].allFinite());
}

TEST(Simulate, ExitsAreStrictlyAboveTheRadius) {
  auto s = settings(5000, 400);
  s.store_steps = 40;
  s.ladder = {1.5, 3.0};
  const auto b = simulate(inverse_bessel(), s);
  int exits = 0;
  for (Eigen::Index p = 0; p < b->n_paths(); ++p) {
    // Ladder rungs are nested: leaving the larger ball means leaving the smaller first.
    EXPECT_LE(b->exit_step(p, 0), b->exit_step(p, 1));
    if (!b->exited(p, 0)) continue;
    ++exits;
    EXPECT_GT(b->exit_state(p, 0).norm(), 1.5);
    EXPECT_GT(b->exit_step(p, 0), 0);
    const int k = b->exit_index(p, 0);
    EXPECT_GE(k, 1);
    EXPECT_LE(k, b->n_store());
    EXPECT_GT(b->interval_max(p, k - 1), 1.5);
    EXPECT_LE(b->exit_time(p, 0), b->T());
  }
  EXPECT_GT(exits, 100);
  // The stored-grid scan sees the same first interval as the fine monitor.
  const Eigen::VectorXi idx = first_exit_index(*b, 1.5);
  for (Eigen::Index p = 0; p < b->n_paths(); ++p) EXPECT_EQ(idx[p], b->exit_index(p, 0));
}

TEST(Simulate, ZeroVolatilityNeverExits) {
  const auto flat = DiffusionModel::custom_1d("flat", 1.0, [](double) { return 0.0; }, true);
  auto s = settings(50, 100);
  s.ladder = {1.0 + 1e-9, 2.0};
  const auto b = simulate(flat, s);
  for (Eigen::Index p = 0; p < b->n_paths(); ++p) {
    EXPECT_FALSE(b->exited(p, 0));
    EXPECT_EQ(b->exit_index(p, 0), b->n_store());
  }
  EXPECT_TRUE((b->states[0].array() == 1.0).all());
  EXPECT_TRUE((b->sup_sum.array() == 1.0).all());
}

TEST(Simulate, SupDominatesStoredStates) {
  auto s = settings(2000, 300);
  s.store_steps = 30;
  const auto b = simulate(inverse_bessel(), s);
  for (Eigen::Index p = 0; p < b->n_paths(); ++p)
    EXPECT_GE(b->sup_sum[p], b->states[0].row(p).maxCoeff());
}

TEST(Simulate, RejectsBadSettings) {
  auto s = settings(10, 100);
  s.store_steps = 30;
  EXPECT_THROW(simulate(inverse_bessel(), s), ConfigError);
  s = settings(10, 10);
  s.ladder = {0.5};
  EXPECT_THROW(simulate(inverse_bessel(), s), ConfigError);
  s = settings(10, 10);
  s.ladder = {4.0, 2.0};
  EXPECT_THROW(simulate(inverse_bessel(), s), ConfigError);
  s = settings(10, 10);
  s.scheme = "milstein";
  EXPECT_THROW(simulate(inverse_bessel(), s), ConfigError);
  ParamMap p;
  p.set("x0", 1.0);
  s.scheme = "exact";
  EXPECT_THROW(simulate(make_builtin_model("gbm", p), s), ConfigError);
  s = settings(0, 10);
  EXPECT_THROW(simulate(inverse_bessel(), s), ConfigError);
}

TEST(Simulate, TwoDimensionalModel) {
  ParamMap p;
  p.set("x0", std::vector<double>{1.0, 1.0});
  p.set("rho", 0.5);
  auto s = settings(3000, 200);
  s.ladder = {4.0};
  const auto b = simulate(make_builtin_model("sin2d", p), s);
  ASSERT_EQ(b->states.size(), 2u);
  EXPECT_GT(b->states[0].minCoeff(), 0.0);
  EXPECT_GT(b->states[1].minCoeff(), 0.0);
  // Second coordinate is a driftless GBM, a true martingale.
  const Estimate e = mean_and_se(b->states[1].col(b->n_store()));
  EXPECT_NEAR(e.value, 1.0, 4 * e.se + 5e-3);
}

TEST(Batch, DumpLoadRoundTrip) {
  auto s = settings(64, 20);
  s.store_steps = 10;
  s.ladder = {2.0};
  const auto b = simulate(inverse_bessel(), s);
  const auto path = (std::filesystem::temp_directory_path() / "slm_batch_roundtrip.bin").string();
  dump_batch(*b, path);
  const PathBatch c = load_batch(path);
  std::filesystem::remove(path);
  EXPECT_EQ(c.scheme, b->scheme);
  EXPECT_EQ(c.seed, b->seed);
  EXPECT_EQ(c.substeps, b->substeps);
  EXPECT_EQ(c.times, b->times);
  EXPECT_EQ(c.states[0], b->states[0]);
  EXPECT_EQ(c.noise[0], b->noise[0]);
  EXPECT_EQ(c.exit_step, b->exit_step);
  EXPECT_EQ(c.sup_sum, b->sup_sum);
  EXPECT_EQ(c.ladder, b->ladder);
  EXPECT_DOUBLE_EQ(terminal_mean(c), terminal_mean(*b));
}

TEST(Batch, LoadRejectsForeignFiles) {
  const auto path = (std::filesystem::temp_directory_path() / "slm_not_a_batch.bin").string();
  {
    std::ofstream o(path);
    o << "hello world, definitely not a batch";
  }
  EXPECT_THROW(load_batch(path), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_batch(path), ConfigError);
}

TEST(Batch, McMeanMatchesColumnMean) {
  auto s = settings(1000, 10);
  const auto b = simulate(inverse_bessel(), s);
  const Estimate e = mc_mean(*b, [](const PathBatch& batch, Eigen::Index p) {
    return batch.state(p, batch.n_store(), 0);
  });
  EXPECT_NEAR(e.value, terminal_mean(*b), 1e-12);
  EXPECT_THROW(mc_mean(*b, [](const PathBatch&, Eigen::Index) { return NAN; }), NumericalError);
}
