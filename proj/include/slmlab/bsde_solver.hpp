#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "slmlab/numerics.hpp"
#include "slmlab/process_models.hpp"
#include "slmlab/sde_engine.hpp"

namespace slm {

enum class Branch { natural, cutoff };

inline const char* to_string(Branch b) { return b == Branch::natural ? "natural" : "cutoff"; }

struct BsdeNumerics {
  int bins = 50;
  int min_bin_paths = 10;
  int picard_max = 20;
  double picard_tol = 1e-10;
  double implicit_threshold = 0.1;  // implicit driver when mu * dt exceeds this
  bool keep_paths = false;          // retain y_paths / z_paths
  std::vector<double> sup_powers{0.25, 0.5, 0.75};
};

struct BasisMeta {
  int min_occupancy = 0;
  int max_occupancy = 0;
  double mean_bins = 0.0;
  bool implicit = false;
  int max_picard_iterations = 0;
};

struct LocalizedSolution {
  BatchPtr batch;
  double rung = 0.0;
  int rung_index = 0;
  Branch branch = Branch::natural;
  // Terminal weight: xi = mix * g(X_tau) + (1 - mix) * g_n(X_tau).
  double mix = 1.0;

  double y0 = 0.0;
  double se = 0.0;
  // Per-path xi + sum of driver increments; its mean is y0.
  Eigen::VectorXd pathwise;
  Estimate xi;
  Estimate escaped_mass;            // mean of Y_tau 1{tau < T}
  Eigen::VectorXd mean_y, se_y;     // mean of Y_{t_k} over paths, per stored time
  std::vector<double> sup_powers;
  std::vector<Estimate> sup_moments;  // mean of sup_k Y_k^p

  Eigen::MatrixXd y_paths;              // n_paths x (K+1), if kept
  std::vector<Eigen::MatrixXd> z_paths;  // per component n_paths x K, if kept
  BasisMeta meta;
};

// Stopped BSDE on one rung for one branch, solved backward by equal-mass bin
// regression on the stored grid.
LocalizedSolution solve_localized(const BatchPtr& batch, const GeneratorSpec& generator,
                                  const TerminalSpec& terminal, Branch branch, double rung,
                                  const BsdeNumerics& numerics = {});

// Several terminal mixes on one rung in a single backward pass (shared bins).
std::vector<LocalizedSolution> solve_mixes(const BatchPtr& batch, const GeneratorSpec& generator,
                                           const TerminalSpec& terminal,
                                           const std::vector<double>& mixes, double rung,
                                           const BsdeNumerics& numerics = {});

struct TwoSolutionResult {
  std::vector<double> ladder;
  std::vector<Estimate> y0_natural, y0_cutoff;
  std::vector<Estimate> escaped_natural, escaped_cutoff;
  std::vector<Estimate> gap;          // per rung, paired s.e.
  std::vector<double> step_se_natural, step_se_cutoff;  // paired s.e. of y0(n+1) - y0(n)
  double y0_natural_extrapolated = 0.0;
  double y0_cutoff_extrapolated = 0.0;
  double gap_extrapolated = 0.0;
  bool natural_monotone = true;
  bool cutoff_monotone = true;
  bool branch_ordering = true;
  std::vector<std::string> warnings;
  std::vector<LocalizedSolution> natural, cutoff;

  const Estimate& gap_last() const { return gap.back(); }
};

TwoSolutionResult solve_ladder(const BatchPtr& batch, const GeneratorSpec& generator,
                               const TerminalSpec& terminal, const BsdeNumerics& numerics = {});

TwoSolutionResult solve_ladder(const DiffusionModel& model, const GeneratorSpec& generator,
                               const TerminalSpec& terminal, const SimulationSettings& settings,
                               const BsdeNumerics& numerics = {});

std::vector<Estimate> class_d_escaped_mass(const std::vector<LocalizedSolution>& ladder);

struct FamilyResult {
  std::vector<double> alphas;
  std::vector<Estimate> y0;
  std::vector<double> step_se;  // paired s.e. of consecutive differences
  bool nondecreasing = true;
};

FamilyResult alpha_family(const BatchPtr& batch, const GeneratorSpec& generator,
                          const TerminalSpec& terminal, const std::vector<double>& alphas,
                          double rung, const BsdeNumerics& numerics = {});

struct ResidualStats {
  double mean_abs = 0.0;
  double max_abs = 0.0;
  long count = 0;
};

// One-step residual of P_k = P_{k+1} + dt (alpha + |Q_k|^2 / 2) - Q_k dB_k
// with P = log Y, Q = Z / Y over paths alive through the whole step.
ResidualStats exp_transform_check(const LocalizedSolution& solution, double alpha_driver,
                                  double y_floor = 1e-300);

struct SupermartingaleReport {
  bool pass = true;
  double max_increase_z = 0.0;  // largest (mean Y_{k+1} - mean Y_k) / se
  double y0_vs_xi_z = 0.0;      // (y0 - E xi) / se, must exceed -3
};

SupermartingaleReport supermartingale_check(const LocalizedSolution& solution, double z = 3.0);

// e^{(mu v 0) T} (E xi + int_0^T H(s, x0_sum) ds).
double lemma22_bound(const GeneratorSpec& generator, double xi_mean, double x0_sum, double T);

}  // namespace slm
