#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slmlab/bsde_solver.hpp"
#include "slmlab/config.hpp"
#include "slmlab/mart_classifier.hpp"
#include "slmlab/pde_solver.hpp"
#include "slmlab/process_models.hpp"
#include "slmlab/report.hpp"
#include "slmlab/sde_engine.hpp"

namespace slm {

struct ModelBlock {
  std::string label;  // section suffix, or the model name for [model]
  std::string name;
  ParamMap params;
};

struct QuadcheckSettings {
  std::vector<int> steps{100, 200, 400};
  int substeps = 5;
  long n_paths = 50000;
  int bins = 400;
  double rung = 16.0;
  std::vector<double> alphas{0.0, 0.1};
};

struct CheckTargets {
  std::optional<double> gap, cutoff, natural;
  double tolerance = 0.01;
  std::vector<std::string> verdicts;  // per classify model, in order
  double quad_ratio = 1.3;
};

struct ExperimentConfig {
  Config raw;
  std::string hash;

  ModelBlock model;
  std::vector<ModelBlock> classify_models;
  std::string terminal_name = "identity";
  ParamMap terminal_params;
  std::string generator_name = "zero";
  ParamMap generator_params;

  SimulationSettings simulation;
  BsdeNumerics numerics;
  std::vector<double> alphas;
  double family_rung = 0.0;

  bool has_pde = false;
  PdeMesh mesh;
  std::vector<double> pde_rungs;
  std::vector<PdePoint> pde_points;
  bool pde_refine = true;
  int extrapolation_points = 3;
  double gap_dx = 0.25;

  bool has_classify = false;
  DefectSettings defect;
  std::vector<double> doob_powers;
  long doob_paths = 20000;
  int doob_steps = 2000;

  bool has_quadcheck = false;
  QuadcheckSettings quadcheck;

  CheckTargets check;
  std::vector<std::string> commands;  // full-report order

  std::string out_dir = "out";
  std::vector<std::string> formats{"csv", "json", "plotdata"};

  DiffusionModel build_model() const;
  TerminalSpec build_terminal() const;
  GeneratorSpec build_generator() const;
};

struct Overrides {
  std::optional<unsigned long long> seed;
  std::optional<std::string> out;
  std::optional<long> paths;
  std::optional<long> steps;
};

// Applies overrides, validates every block and records the config hash.
ExperimentConfig load_experiment(Config raw, const Overrides& overrides = {});
ExperimentConfig load_experiment_file(const std::string& path, const Overrides& overrides = {});

struct CheckRow {
  std::string check;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunOutcome {
  std::vector<std::string> files;
  std::vector<CheckRow> checks;
  bool checks_pass() const;
};

// Commands: simulate | classify | bsde | pde | family | quadcheck | full-report.
// Throws ConfigError / NumericalError; `check` only affects full-report.
RunOutcome run_command(const std::string& command, const ExperimentConfig& config,
                       bool check = false);

const std::vector<std::string>& known_commands();

}  // namespace slm
