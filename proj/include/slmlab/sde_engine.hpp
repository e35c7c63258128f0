#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "slmlab/numerics.hpp"
#include "slmlab/process_models.hpp"

namespace slm {

struct SimulationSettings {
  double T = 1.0;
  int n_steps = 2000;    // monitoring steps; exits and sups are tracked here
  int store_steps = 0;   // stored grid intervals, must divide n_steps; 0 = n_steps
  long n_paths = 200000;
  std::uint64_t seed = 1;
  std::vector<double> ladder;
  std::string scheme = "auto";  // auto | euler | exact
  int workers = 1;
  bool keep_noise = true;
  bool keep_interval_max = true;
};

// Simulated trajectories. States and Brownian increments live on the stored
// grid `times`; each stored interval is split into `substeps` monitoring
// steps on which exits, interval maxima and running sups are recorded.
struct PathBatch {
  int dim = 1;
  std::string scheme;
  std::uint64_t seed = 0;
  Eigen::VectorXd x0;
  Eigen::VectorXd times;  // stored grid t_0 .. t_K
  int substeps = 1;
  std::vector<double> ladder;

  std::vector<Eigen::MatrixXd> states;  // per component: n_paths x (K+1)
  std::vector<Eigen::MatrixXd> noise;   // per component: n_paths x K, empty if not kept
  Eigen::MatrixXd interval_max;         // n_paths x K: max |X| (pre-clamp) over each interval
  Eigen::VectorXd sup_sum;              // sup over the monitoring grid of sum_i X^i
  Eigen::MatrixXi exit_step;            // n_paths x rungs, monitoring index, sentinel n_fine()
  std::vector<Eigen::MatrixXd> exit_states;  // per component: n_paths x rungs

  Eigen::Index n_paths() const { return states.empty() ? 0 : states.front().rows(); }
  int n_store() const { return int(times.size()) - 1; }
  int n_fine() const { return n_store() * substeps; }
  double T() const { return times[times.size() - 1]; }
  double fine_time(int step) const;

  double state(Eigen::Index path, int k, int comp) const { return states[comp](path, k); }
  double state_sum(Eigen::Index path, int k) const;
  Eigen::VectorXd state_vector(Eigen::Index path, int k) const;
  Eigen::VectorXd exit_state(Eigen::Index path, int rung) const;

  // Index of `radius` in the ladder, or -1.
  int rung_index(double radius) const;
  // Stored-grid index of the exit from rung `rung`: ceil(exit_step/substeps),
  // n_store() if the path never exits.
  int exit_index(Eigen::Index path, int rung) const;
  bool exited(Eigen::Index path, int rung) const { return exit_step(path, rung) < n_fine(); }
  double exit_time(Eigen::Index path, int rung) const;
};

using BatchPtr = std::shared_ptr<const PathBatch>;

// Euler-Maruyama with positivity clamp, or an exact Bessel sampler when
// scheme = exact (or auto and the model has an integer Bessel dimension).
BatchPtr simulate(const DiffusionModel& model, const SimulationSettings& settings);

// Euler-Maruyama on a uniform grid, every step stored.
PathBatch simulate_paths(const DiffusionModel& model, double T, int n_steps, long n_paths,
                         std::uint64_t seed, const std::vector<double>& ladder);

// X_t = 1/|W_t + e/x0| sampled exactly on an arbitrary increasing grid.
PathBatch simulate_inverse_bessel_exact(double x0, const Eigen::VectorXd& times, long n_paths,
                                        std::uint64_t seed,
                                        const std::vector<double>& ladder = {});

// First stored index whose interval carries |X| > radius; n_store() if none.
Eigen::VectorXi first_exit_index(const PathBatch& batch, double radius);

using PathFunctional = std::function<double(const PathBatch&, Eigen::Index)>;
Estimate mc_mean(const PathBatch& batch, const PathFunctional& functional);

void dump_batch(const PathBatch& batch, const std::string& path);
PathBatch load_batch(const std::string& path);

}  // namespace slm
