#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "slmlab/bsde_solver.hpp"
#include "slmlab/process_models.hpp"

namespace slm {

// Uniform space-time mesh on [x_min, rung] x [0, T]. x_min is 0 when the
// model's volatility vanishes on the boundary, else a small truncation eps.
struct PdeGrid {
  double rung = 1.0;
  double T = 1.0;
  double x_min = 0.0;
  int M = 1;  // space intervals
  int N = 1;  // time intervals

  double dx() const { return (rung - x_min) / M; }
  double dt() const { return T / N; }
  double x(int j) const { return x_min + dx() * j; }
  double t(int k) const { return dt() * k; }
};

// Chooses M = round((rung - x_min)/dx) and N = ceil(T/dt).
PdeGrid make_grid(const DiffusionModel& model, double rung, double dx, double dt, double T,
                  double eps = 1e-3);

struct SchemeMeta {
  double diffusion_ratio = 0.0;   // max dt sigma^2 / dx^2 (implicit part, unrestricted)
  double monotone_number = 0.0;   // dt (mu + max L_j / dx), must not exceed 1
  bool degenerate_left = true;
  int steps = 0;
};

struct PdeSolution {
  PdeGrid grid;
  Branch branch = Branch::natural;
  double mix = 1.0;
  Eigen::MatrixXd values;  // (N+1) x (M+1), row k is time t_k
  SchemeMeta meta;

  // Bilinear interpolation; throws outside the mesh.
  double value_at(double t, double x) const;

  // Wraps a closed-form candidate on a grid (for residual checks).
  static PdeSolution from_function(const PdeGrid& grid, const std::function<double(double, double)>& u);
};

struct PdeOptions {
  // Left Dirichlet data u(t, x_min) for models without zero boundary volatility.
  std::function<double(double)> left_dirichlet;
};

PdeSolution solve_bvp(const DiffusionModel& model, const GeneratorSpec& generator,
                      const TerminalSpec& terminal, Branch branch, const PdeGrid& grid,
                      const PdeOptions& options = {});

struct PdePoint {
  double t = 0.0;
  double x = 1.0;
};

struct PdeMesh {
  double dx = 0.01;
  double dt = 1e-3;
  double T = 1.0;
};

struct PdeLadderResult {
  std::vector<double> ladder;
  std::vector<PdePoint> points;
  // [rung][point] on the finest mesh solved, and on the base mesh.
  std::vector<std::vector<double>> u, ubar, u_base, ubar_base;
  std::vector<double> u_estimate, ubar_estimate;  // polynomial extrapolation in 1/n
  std::vector<double> gap_last, gap_estimate;
  std::vector<double> error_estimate;  // |gap_L - gap_{L-1}| + mesh difference of gap_L
  bool refined = false;
  bool cutoff_monotone = true;
  bool natural_monotone = true;
  std::vector<std::string> warnings;
  std::vector<PdeSolution> natural, cutoff;  // finest mesh, per rung
};

PdeLadderResult pde_ladder(const DiffusionModel& model, const GeneratorSpec& generator,
                           const TerminalSpec& terminal, const std::vector<double>& ladder,
                           const PdeMesh& mesh, const std::vector<PdePoint>& points,
                           bool refine = true, const PdeOptions& options = {},
                           int extrapolation_points = 3);

struct CrossCheck {
  PdePoint point;
  double pde = 0.0;
  double bsde = 0.0;
  double bsde_se = 0.0;
  double discrepancy = 0.0;
};

struct CrossValidation {
  std::vector<CrossCheck> checks;
  double max_abs = 0.0;
  double budget = 0.0;  // 3 * max bsde s.e. + pde tolerance
};

// Re-simulation context for points off (0, x0): the BSDE is re-solved from x
// with horizon T - t. Valid for time-homogeneous drivers.
struct SliceContext {
  DiffusionModel model;
  GeneratorSpec generator;
  TerminalSpec terminal;
  SimulationSettings simulation;
  BsdeNumerics numerics;
};

CrossValidation cross_validate(const PdeSolution& pde, const TwoSolutionResult& bsde,
                               const std::vector<PdePoint>& points,
                               const SliceContext* slice = nullptr, double pde_tolerance = 5e-3);

struct PdeResidual {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  int count = 0;
};

// Time-centred residual of -u_t - sigma^2 u_xx / 2 - f at the nodes nearest
// the sample points. The scheme's own equation is first order in time, so
// this picks up its truncation error and shrinks under refinement.
PdeResidual interior_residual(const PdeSolution& pde, const DiffusionModel& model,
                              const GeneratorSpec& generator, const std::vector<PdePoint>& sample);

// Left Dirichlet data by Monte Carlo: the BSDE solved from x = x_min over
// horizons T - t at `nodes` times, linearly interpolated.
std::function<double(double)> mc_left_dirichlet(const DiffusionModel& model,
                                                const GeneratorSpec& generator,
                                                const TerminalSpec& terminal, Branch branch,
                                                double rung, double x_min, double T, int nodes,
                                                const SimulationSettings& simulation,
                                                const BsdeNumerics& numerics = {});

}  // namespace slm
