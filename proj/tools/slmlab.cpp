// slmlab <command> --config <path> [--seed N] [--out DIR] [--paths N] [--steps N] [--check]
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 acceptance-check
// failure (full-report --check), 1 anything else.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "slmlab/errors.hpp"
#include "slmlab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-solution BSDE and strict local martingale laboratory"};
  std::string command, config_path;
  slm::Overrides ov;
  unsigned long long seed = 0;
  std::string out;
  long paths = 0, steps = 0;
  bool check = false, quiet = false;

  app.add_option("command", command, "simulate | classify | bsde | pde | family | quadcheck | full-report")
      ->required()
      ->check(CLI::IsMember(slm::known_commands()));
  app.add_option("--config", config_path, "experiment config file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override run.seed");
  auto* out_opt = app.add_option("--out", out, "override outputs.directory");
  auto* paths_opt = app.add_option("--paths", paths, "override run.n_paths")->check(CLI::PositiveNumber);
  auto* steps_opt = app.add_option("--steps", steps, "override run.n_steps")->check(CLI::PositiveNumber);
  app.add_flag("--check", check, "full-report: exit 4 when a check fails");
  app.add_flag("-q,--quiet", quiet, "print nothing on success");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) ov.seed = seed;
  if (*out_opt) ov.out = out;
  if (*paths_opt) ov.paths = paths;
  if (*steps_opt) ov.steps = steps;

  try {
    const auto cfg = slm::load_experiment_file(config_path, ov);
    const auto result = slm::run_command(command, cfg, check);
    if (!quiet) {
      std::cout << "config_hash " << cfg.hash << "\n";
      for (const auto& f : result.files) std::cout << "wrote " << cfg.out_dir << "/" << f << "\n";
      for (const auto& r : result.checks)
        if (command == "full-report" && check)
          std::cout << (r.pass ? "PASS " : "FAIL ") << r.check << " value=" << slm::fmt(r.value)
                    << " target=" << slm::fmt(r.target) << " tol=" << slm::fmt(r.tolerance) << "\n";
    }
    if (command == "full-report" && check && !result.checks_pass()) {
      std::cerr << "slmlab: acceptance checks failed\n";
      return 4;
    }
    return 0;
  } catch (const slm::ConfigError& e) {
    std::cerr << "slmlab: config error: " << e.what() << "\n";
    return 2;
  } catch (const slm::NumericalError& e) {
    std::cerr << "slmlab: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "slmlab: " << e.what() << "\n";
    return 1;
  }
}
