#include "slmlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

#include "slmlab/errors.hpp"
#include "slmlab/numerics.hpp"

namespace slm {

using nlohmann::json;

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c{"simulate", "classify", "bsde",       "pde",
                                          "family",   "quadcheck", "full-report"};
  return c;
}

bool RunOutcome::checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRow& r) { return r.pass; });
}

DiffusionModel ExperimentConfig::build_model() const {
  return make_builtin_model(model.name, model.params);
}
TerminalSpec ExperimentConfig::build_terminal() const {
  return make_terminal(terminal_name, terminal_params);
}
GeneratorSpec ExperimentConfig::build_generator() const {
  return make_generator(generator_name, generator_params);
}

// ---------------------------------------------------------------- loading

namespace {

const std::vector<std::string> kModelKeys{"name", "x0", "beta", "rho"};

ConfigError field_error(const Config& c, const std::string& what) {
  return ConfigError(c.origin() + ": " + what);
}

ModelBlock read_model(const Config& c, const std::string& section) {
  c.require_known(section, kModelKeys);
  ModelBlock m;
  const auto colon = section.find(':');
  m.name = c.get_string(section, "name");
  m.label = colon == std::string::npos ? m.name : section.substr(colon + 1);
  if (!c.has(section, "x0")) throw field_error(c, "missing field '" + section + ".x0'");
  m.params.set("x0", c.get_doubles(section, "x0"));
  for (const char* k : {"beta", "rho"})
    if (c.has(section, k)) m.params.set(k, c.get_double(section, k));
  try {
    make_builtin_model(m.name, m.params);
  } catch (const ConfigError& e) {
    throw field_error(c, "[" + section + "] " + e.what());
  }
  return m;
}

ParamMap read_params(const Config& c, const std::string& section,
                     const std::vector<std::string>& keys) {
  ParamMap p;
  for (const auto& k : keys)
    if (c.has(section, k)) p.set(k, c.get_double(section, k));
  return p;
}

int default_store_steps(int n_steps) {
  for (int s = std::min(n_steps, 200); s >= 1; --s)
    if (n_steps % s == 0) return s;
  return n_steps;
}

void require(bool ok, const Config& c, const std::string& msg) {
  if (!ok) throw field_error(c, msg);
}

}  // namespace

ExperimentConfig load_experiment(Config c, const Overrides& ov) {
  if (ov.seed) c.set("run", "seed", std::to_string(*ov.seed));
  if (ov.out) c.set("outputs", "directory", *ov.out);
  if (ov.paths) c.set("run", "n_paths", std::to_string(*ov.paths));
  if (ov.steps) {
    c.set("run", "n_steps", std::to_string(*ov.steps));
    if (c.has("run", "store_steps")) c.set("run", "store_steps", "0");
  }

  static const std::vector<std::string> known_sections{
      "model", "terminal", "generator", "run", "pde", "classify", "quadcheck", "outputs", "check"};
  for (const auto& s : c.sections())
    if (s.rfind("model:", 0) != 0 &&
        std::find(known_sections.begin(), known_sections.end(), s) == known_sections.end())
      throw field_error(c, "unknown section [" + s + "]");

  ExperimentConfig e;
  e.raw = c;
  {
    // Where results go is not part of what they are.
    Config h = c;
    h.set("outputs", "directory", "-");
    e.hash = h.hash();
  }
  if (!c.has_section("model")) throw field_error(c, "missing section [model]");
  e.model = read_model(c, "model");
  for (const auto& s : c.sections())
    if (s.rfind("model:", 0) == 0) e.classify_models.push_back(read_model(c, s));

  c.require_known("terminal", {"name", "strike", "cap", "cutoff_width"});
  e.terminal_name = c.get_string("terminal", "name", "identity");
  e.terminal_params = read_params(c, "terminal", {"strike", "cap", "cutoff_width"});
  c.require_known("generator", {"name", "alpha", "c", "b_loglog"});
  e.generator_name = c.get_string("generator", "name", "zero");
  e.generator_params = read_params(c, "generator", {"alpha", "c", "b_loglog"});
  try {
    e.build_terminal();
    e.build_generator();
  } catch (const ConfigError& err) {
    throw field_error(c, err.what());
  }

  c.require_known("run", {"T", "n_steps", "store_steps", "n_paths", "seed", "ladder", "scheme",
                          "workers", "alphas", "family_rung", "bins", "min_bin_paths",
                          "commands"});
  auto& sim = e.simulation;
  sim.T = c.get_double("run", "T", 1.0);
  sim.n_steps = int(c.get_int("run", "n_steps", 2000));
  sim.n_paths = c.get_int("run", "n_paths", 200000);
  sim.seed = static_cast<std::uint64_t>(c.get_int("run", "seed", 1));
  sim.ladder = c.get_doubles("run", "ladder", {2, 4, 8, 16});
  sim.scheme = c.get_string("run", "scheme", "auto");
  sim.workers = int(c.get_int("run", "workers", 1));
  sim.keep_interval_max = false;
  require(sim.T > 0.0, c, "field 'run.T' must be positive");
  require(sim.n_steps >= 1, c, "field 'run.n_steps' must be at least 1");
  require(sim.n_paths >= 2, c, "field 'run.n_paths' must be at least 2");
  require(sim.workers >= 1, c, "field 'run.workers' must be at least 1");
  const long store = c.get_int("run", "store_steps", 0);
  sim.store_steps = store > 0 ? int(store) : default_store_steps(sim.n_steps);
  require(sim.n_steps % sim.store_steps == 0, c,
          "field 'run.store_steps' must divide run.n_steps");
  require(!sim.ladder.empty(), c, "field 'run.ladder' must not be empty");
  const double x0_norm = e.build_model().x0().norm();
  for (std::size_t i = 0; i < sim.ladder.size(); ++i) {
    require(sim.ladder[i] > x0_norm, c, "field 'run.ladder' must exceed |x0|");
    require(i == 0 || sim.ladder[i] > sim.ladder[i - 1], c, "field 'run.ladder' must increase");
  }
  e.numerics.bins = int(c.get_int("run", "bins", 50));
  e.numerics.min_bin_paths = int(c.get_int("run", "min_bin_paths", 10));
  require(e.numerics.bins >= 1, c, "field 'run.bins' must be at least 1");
  e.alphas = c.get_doubles("run", "alphas", {});
  for (double a : e.alphas) require(a >= 0.0 && a <= 1.0, c, "field 'run.alphas' must lie in [0, 1]");
  e.family_rung = c.get_double("run", "family_rung", sim.ladder.back());
  require(std::find(sim.ladder.begin(), sim.ladder.end(), e.family_rung) != sim.ladder.end(), c,
          "field 'run.family_rung' must be one of run.ladder");

  c.require_known("pde", {"dx", "dt", "rungs", "t", "x", "refine", "extrapolation_points", "gap_dx"});
  e.has_pde = c.has_section("pde");
  e.mesh.dx = c.get_double("pde", "dx", 0.01);
  e.mesh.dt = c.get_double("pde", "dt", 1e-3);
  e.mesh.T = sim.T;
  e.pde_rungs = c.get_doubles("pde", "rungs", sim.ladder);
  e.pde_refine = c.get_bool("pde", "refine", true);
  e.extrapolation_points = int(c.get_int("pde", "extrapolation_points", 3));
  e.gap_dx = c.get_double("pde", "gap_dx", 0.25);
  require(e.mesh.dx > 0.0 && e.mesh.dt > 0.0 && e.gap_dx > 0.0, c,
          "fields 'pde.dx', 'pde.dt', 'pde.gap_dx' must be positive");
  require(e.extrapolation_points >= 1, c, "field 'pde.extrapolation_points' must be at least 1");
  for (double t : c.get_doubles("pde", "t", {0.0}))
    for (double x : c.get_doubles("pde", "x", {e.model.params.list("x0").front()}))
      e.pde_points.push_back({t, x});

  c.require_known("classify", {"n_paths", "n_steps", "z_threshold", "doob_p", "doob_paths",
                               "doob_steps"});
  e.has_classify = c.has_section("classify");
  e.defect.T = sim.T;
  e.defect.n_paths = c.get_int("classify", "n_paths", sim.n_paths);
  e.defect.n_steps = int(c.get_int("classify", "n_steps", sim.n_steps));
  e.defect.seed = sim.seed;
  e.defect.workers = sim.workers;
  e.defect.z_threshold = c.get_double("classify", "z_threshold", 3.0);
  e.doob_powers = c.get_doubles("classify", "doob_p", {});
  e.doob_paths = c.get_int("classify", "doob_paths", 20000);
  e.doob_steps = int(c.get_int("classify", "doob_steps", sim.n_steps));
  for (double p : e.doob_powers) require(p > 0.0 && p < 1.0, c, "field 'classify.doob_p' must lie in (0, 1)");
  if (e.classify_models.empty()) e.classify_models.push_back(e.model);

  c.require_known("quadcheck", {"steps", "substeps", "n_paths", "bins", "rung", "alphas"});
  e.has_quadcheck = c.has_section("quadcheck");
  auto& q = e.quadcheck;
  q.steps.clear();
  for (double s : c.get_doubles("quadcheck", "steps", {100, 200, 400})) q.steps.push_back(int(s));
  q.substeps = int(c.get_int("quadcheck", "substeps", 5));
  q.n_paths = c.get_int("quadcheck", "n_paths", 50000);
  q.bins = int(c.get_int("quadcheck", "bins", 400));
  q.rung = c.get_double("quadcheck", "rung", sim.ladder.back());
  q.alphas = c.get_doubles("quadcheck", "alphas", {0.0, 0.1});
  require(q.substeps >= 1 && q.n_paths >= 2 && q.bins >= 1, c, "invalid [quadcheck] sizes");

  c.require_known("outputs", {"directory", "formats"});
  e.out_dir = c.get_string("outputs", "directory", "out");
  e.formats = c.get_strings("outputs", "formats", {"csv", "json", "plotdata"});
  ReportWriter(e.out_dir, e.hash, e.formats);  // validates the format names

  c.require_known("check", {"gap", "cutoff", "natural", "tolerance", "verdicts", "quad_ratio"});
  if (c.has("check", "gap")) e.check.gap = c.get_double("check", "gap");
  if (c.has("check", "cutoff")) e.check.cutoff = c.get_double("check", "cutoff");
  if (c.has("check", "natural")) e.check.natural = c.get_double("check", "natural");
  e.check.tolerance = c.get_double("check", "tolerance", 0.01);
  e.check.verdicts = c.get_strings("check", "verdicts", {});
  e.check.quad_ratio = c.get_double("check", "quad_ratio", 1.3);
  require(e.check.verdicts.empty() || e.check.verdicts.size() == e.classify_models.size(), c,
          "field 'check.verdicts' needs one verdict per classified model");

  std::vector<std::string> dflt{"simulate"};
  if (e.has_classify) dflt.push_back("classify");
  dflt.push_back("bsde");
  if (!e.alphas.empty()) dflt.push_back("family");
  if (e.has_pde) dflt.push_back("pde");
  if (e.has_quadcheck) dflt.push_back("quadcheck");
  e.commands = c.get_strings("run", "commands", dflt);
  for (const auto& cmd : e.commands)
    require(cmd != "full-report" &&
                std::find(known_commands().begin(), known_commands().end(), cmd) !=
                    known_commands().end(),
            c, "field 'run.commands' has unknown command '" + cmd + "'");
  return e;
}

ExperimentConfig load_experiment_file(const std::string& path, const Overrides& overrides) {
  return load_experiment(Config::load(path), overrides);
}

// ---------------------------------------------------------------- running

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json estimates_json(const std::vector<Estimate>& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back({{"value", e.value}, {"se", e.se}});
  return a;
}

class Runner {
 public:
  Runner(const ExperimentConfig& c) : c_(c), w_(c.out_dir, c.hash, c.formats) {}

  void run(const std::string& cmd) {
    if (cmd == "simulate") simulate_cmd();
    else if (cmd == "classify") classify_cmd();
    else if (cmd == "bsde") bsde_cmd();
    else if (cmd == "family") family_cmd();
    else if (cmd == "pde") pde_cmd();
    else if (cmd == "quadcheck") quadcheck_cmd();
    else throw ConfigError("unknown command '" + cmd + "'");
  }

  RunOutcome finish(bool write_checks) {
    if (write_checks) {
      CsvTable t{{"check", "value", "target", "tolerance", "pass"}, {}};
      for (const auto& r : checks_) t.add(r.check, r.value, r.target, r.tolerance, r.pass);
      w_.csv("check.csv", t);
    }
    check_report_dir(c_.out_dir, c_.hash);
    RunOutcome out;
    out.files = w_.written();
    out.checks = checks_;
    return out;
  }

 private:
  const BatchPtr& batch() {
    if (!batch_) batch_ = simulate(c_.build_model(), c_.simulation);
    return batch_;
  }

  void add_check(std::string name, double value, double target, double tol, bool pass) {
    checks_.push_back({std::move(name), value, target, tol, pass});
  }

  void simulate_cmd() {
    const auto t0 = Clock::now();
    const auto& b = *batch();
    CsvTable path{{"t", "mean", "se"}, {}};
    Series mean_path;
    Eigen::VectorXd sums(b.n_paths());
    for (int k = 0; k <= b.n_store(); ++k) {
      for (Eigen::Index p = 0; p < b.n_paths(); ++p) sums[p] = b.state_sum(p, k);
      const Estimate e = mean_and_se(sums);
      path.add(b.times[k], e.value, e.se);
      mean_path.push_back({b.times[k], e.value});
    }
    CsvTable exits{{"rung", "exit_fraction", "se"}, {}};
    for (int r = 0; r < int(b.ladder.size()); ++r) {
      Eigen::VectorXd ind(b.n_paths());
      for (Eigen::Index p = 0; p < b.n_paths(); ++p) ind[p] = b.exited(p, r) ? 1.0 : 0.0;
      const Estimate e = mean_and_se(ind);
      exits.add(b.ladder[std::size_t(r)], e.value, e.se);
    }
    w_.csv("simulate.csv", path);
    w_.csv("exits.csv", exits);
    w_.plotdata("mean_path.dat", mean_path, "t", "mean_sum_x");
    json j{{"command", "simulate"}, {"model", c_.model.name}, {"scheme", b.scheme},
           {"n_paths", b.n_paths()}, {"n_steps", b.n_fine()}, {"stored_steps", b.n_store()}};
    j["mean_terminal"] = mean_path.back().second;
    if (c_.model.name == "inverse_bessel")
      j["oracle_mean_terminal"] = inverse_bessel_mean(b.x0[0], b.T());
    w_.json("simulate.json", j, c_.simulation.seed, seconds_since(t0));
  }

  void bsde_cmd() {
    const auto t0 = Clock::now();
    const auto gen = c_.build_generator();
    const auto term = c_.build_terminal();
    const auto r = solve_ladder(batch(), gen, term, c_.numerics);

    CsvTable t{{"rung", "branch", "y0", "se", "escaped_mass"}, {}};
    Series nat, cut, gap;
    for (std::size_t i = 0; i < r.ladder.size(); ++i) {
      t.add(r.ladder[i], "natural", r.y0_natural[i].value, r.y0_natural[i].se,
            r.escaped_natural[i].value);
      t.add(r.ladder[i], "cutoff", r.y0_cutoff[i].value, r.y0_cutoff[i].se,
            r.escaped_cutoff[i].value);
      nat.push_back({r.ladder[i], r.y0_natural[i].value});
      cut.push_back({r.ladder[i], r.y0_cutoff[i].value});
      gap.push_back({r.ladder[i], r.gap[i].value});
    }
    w_.csv("bsde_ladder.csv", t);
    w_.plotdata("ladder_natural.dat", nat, "n", "y0_natural");
    w_.plotdata("ladder_cutoff.dat", cut, "n", "y0_cutoff");
    w_.plotdata("gap_vs_n.dat", gap, "n", "gap");

    const double x0 = batch()->x0.sum(), T = batch()->T();
    const auto& ln = r.natural.back();
    const auto& lc = r.cutoff.back();
    const double bound_n = lemma22_bound(gen, ln.xi.value, x0, T);
    const double bound_c = lemma22_bound(gen, lc.xi.value, x0, T);
    const auto sm_n = supermartingale_check(ln), sm_c = supermartingale_check(lc);
    json j{{"command", "bsde"},
           {"model", c_.model.name},
           {"generator", gen.name()},
           {"terminal", term.name()},
           {"ladder", r.ladder},
           {"y0_natural", estimates_json(r.y0_natural)},
           {"y0_cutoff", estimates_json(r.y0_cutoff)},
           {"gap", estimates_json(r.gap)},
           {"escaped_natural", estimates_json(r.escaped_natural)},
           {"y0_natural_extrapolated", r.y0_natural_extrapolated},
           {"y0_cutoff_extrapolated", r.y0_cutoff_extrapolated},
           {"gap_extrapolated", r.gap_extrapolated},
           {"natural_monotone", r.natural_monotone},
           {"cutoff_monotone", r.cutoff_monotone},
           {"branch_ordering", r.branch_ordering},
           {"warnings", r.warnings},
           {"upper_bound_natural", bound_n},
           {"upper_bound_cutoff", bound_c},
           {"supermartingale_natural", sm_n.pass},
           {"supermartingale_cutoff", sm_c.pass}};
    w_.json("bsde_summary.json", j, c_.simulation.seed, seconds_since(t0));

    add_check("bsde.cutoff_monotone", r.cutoff_monotone, 1, 0, r.cutoff_monotone);
    if (term.satisfies_h4())
      add_check("bsde.natural_monotone", r.natural_monotone, 1, 0, r.natural_monotone);
    add_check("bsde.branch_ordering", r.branch_ordering, 1, 0, r.branch_ordering);
    add_check("bsde.upper_bound.natural", ln.y0, bound_n, 3 * ln.se, ln.y0 <= bound_n + 3 * ln.se);
    add_check("bsde.upper_bound.cutoff", lc.y0, bound_c, 3 * lc.se, lc.y0 <= bound_c + 3 * lc.se);
    add_check("bsde.supermartingale.natural", sm_n.max_increase_z, 3, 0, sm_n.pass);
    add_check("bsde.supermartingale.cutoff", sm_c.max_increase_z, 3, 0, sm_c.pass);
    bool zero = true;
    for (const auto& e : r.escaped_cutoff) zero = zero && e.value == 0.0;
    add_check("bsde.escaped_cutoff_zero", zero ? 0.0 : 1.0, 0, 0, zero);
    auto target = [&](const char* name, const std::optional<double>& want, const Estimate& got) {
      if (!want) return;
      const double tol = std::max(c_.check.tolerance, 3 * got.se);
      add_check(name, got.value, *want, tol, std::abs(got.value - *want) <= tol);
    };
    target("bsde.gap", c_.check.gap, r.gap_last());
    target("bsde.cutoff", c_.check.cutoff, r.y0_cutoff.back());
    target("bsde.natural", c_.check.natural, r.y0_natural.back());
  }

  void family_cmd() {
    if (c_.alphas.empty()) throw ConfigError(c_.raw.origin() + ": family needs field 'run.alphas'");
    const auto t0 = Clock::now();
    const auto f = alpha_family(batch(), c_.build_generator(), c_.build_terminal(), c_.alphas,
                                c_.family_rung, c_.numerics);
    CsvTable t{{"alpha", "y0", "se"}, {}};
    Series s;
    for (std::size_t i = 0; i < f.alphas.size(); ++i) {
      t.add(f.alphas[i], f.y0[i].value, f.y0[i].se);
      s.push_back({f.alphas[i], f.y0[i].value});
    }
    w_.csv("family.csv", t);
    w_.plotdata("family.dat", s, "alpha", "y0");
    w_.json("family.json",
            json{{"command", "family"}, {"rung", c_.family_rung}, {"alphas", f.alphas},
                 {"y0", estimates_json(f.y0)}, {"step_se", f.step_se},
                 {"nondecreasing", f.nondecreasing}},
            c_.simulation.seed, seconds_since(t0));
    add_check("family.nondecreasing", f.nondecreasing, 1, 0, f.nondecreasing);
  }

  void pde_cmd() {
    const auto t0 = Clock::now();
    const auto model = c_.build_model();
    if (model.dim() != 1) throw ConfigError(c_.raw.origin() + ": pde supports 1-d models only");
    const auto term = c_.build_terminal();
    const auto r = pde_ladder(model, c_.build_generator(), term, c_.pde_rungs, c_.mesh,
                              c_.pde_points, c_.pde_refine, {}, c_.extrapolation_points);

    const auto& un = r.natural.back();
    const auto& uc = r.cutoff.back();
    CsvTable gap{{"x", "u", "ubar", "gap"}, {}};
    Series gs;
    for (int i = 1; i * c_.gap_dx <= un.grid.rung + 1e-12; ++i) {
      const double x = std::min(i * c_.gap_dx, un.grid.rung);
      const double u = un.value_at(0.0, x), ub = uc.value_at(0.0, x);
      gap.add(x, u, ub, u - ub);
      gs.push_back({x, u - ub});
    }
    w_.csv("pde_gap.csv", gap);
    w_.plotdata("pde_gap.dat", gs, "x", "gap");

    CsvTable ladder{{"rung", "t", "x", "u", "ubar"}, {}};
    for (std::size_t n = 0; n < r.ladder.size(); ++n)
      for (std::size_t i = 0; i < r.points.size(); ++i)
        ladder.add(r.ladder[n], r.points[i].t, r.points[i].x, r.u[n][i], r.ubar[n][i]);
    w_.csv("pde_ladder.csv", ladder);

    CsvTable est{{"t", "x", "u", "ubar", "gap_last", "gap_estimate", "error_estimate"}, {}};
    for (std::size_t i = 0; i < r.points.size(); ++i)
      est.add(r.points[i].t, r.points[i].x, r.u_estimate[i], r.ubar_estimate[i], r.gap_last[i],
              r.gap_estimate[i], r.error_estimate[i]);
    w_.csv("pde_estimate.csv", est);

    w_.json("pde_summary.json",
            json{{"command", "pde"},
                 {"rungs", r.ladder},
                 {"dx", c_.mesh.dx},
                 {"dt", c_.mesh.dt},
                 {"refined", r.refined},
                 {"cutoff_monotone", r.cutoff_monotone},
                 {"natural_monotone", r.natural_monotone},
                 {"warnings", r.warnings},
                 {"monotone_number", uc.meta.monotone_number}},
            c_.simulation.seed, seconds_since(t0));
    add_check("pde.cutoff_monotone", r.cutoff_monotone, 1, 0, r.cutoff_monotone);
    if (term.satisfies_h4())
      add_check("pde.natural_monotone", r.natural_monotone, 1, 0, r.natural_monotone);
  }

  void classify_cmd() {
    const auto t0 = Clock::now();
    CsvTable t{{"model", "name", "feller_verdict", "feller_value", "defect", "se", "z",
                "defect_method", "verdict"},
               {}};
    CsvTable doob{{"model", "p", "lhs", "se", "bound", "pass"}, {}};
    json reports = json::array();
    for (std::size_t i = 0; i < c_.classify_models.size(); ++i) {
      const auto& mb = c_.classify_models[i];
      const auto model = make_builtin_model(mb.name, mb.params);
      std::string fv = "n/a";
      double fval = std::nan("");
      if (model.dim() == 1) {
        const auto f = feller_test([&](double r) { return model.sigma1(r); },
                                   feller_lower_limit(model));
        fv = to_string(f.verdict);
        const Evidence* e = f.find("feller.integral");
        if (!e) e = f.find("feller.partial_integral");
        fval = e->value;
      }
      const auto rep = classify(model, c_.defect);
      const double defect = rep.find("defect.value")->value;
      const double se = rep.find("defect.se")->value;
      const std::string method = model.kind() == ModelKind::sin2d ? "follmer"
                                 : model.bessel_dimension()       ? "exact"
                                                                  : "euler";
      t.add(mb.label, mb.name, fv, fval, defect, se, *rep.confidence, method,
            to_string(rep.verdict));
      reports.push_back(json::parse(rep.to_json()));
      if (!c_.check.verdicts.empty()) {
        const bool ok = c_.check.verdicts[i] == to_string(rep.verdict);
        add_check("classify." + mb.label, *rep.confidence, 0, 0, ok);
      }
      for (double p : c_.doob_powers) {
        SimulationSettings s;
        s.T = c_.simulation.T;
        s.n_steps = c_.doob_steps;
        s.store_steps = 1;
        s.n_paths = c_.doob_paths;
        s.seed = c_.simulation.seed;
        s.workers = c_.simulation.workers;
        s.keep_noise = false;
        s.keep_interval_max = false;
        s.scheme = model.bessel_dimension() ? "exact" : "euler";
        const auto d = doob_lp_check(*simulate(model, s), p);
        doob.add(mb.label, p, d.lhs, d.se, d.bound, d.pass);
        add_check("doob." + mb.label + ".p" + fmt(p), d.lhs, d.bound, 3 * d.se, d.pass);
      }
    }
    w_.csv("classifier.csv", t);
    if (!c_.doob_powers.empty()) w_.csv("doob.csv", doob);
    w_.json("classifier.json", json{{"command", "classify"}, {"reports", reports}},
            c_.simulation.seed, seconds_since(t0));
  }

  void quadcheck_cmd() {
    const auto t0 = Clock::now();
    const auto& q = c_.quadcheck;
    const auto model = c_.build_model();
    const auto term = c_.build_terminal();
    CsvTable t{{"n_steps", "alpha", "mean_abs", "max_abs", "ratio"}, {}};
    json rows = json::array();
    for (double alpha : q.alphas) {
      ParamMap gp;
      gp.set("alpha", alpha);
      const auto gen = make_generator("linear_y", gp);
      double prev = 0.0;
      for (std::size_t i = 0; i < q.steps.size(); ++i) {
        SimulationSettings s = c_.simulation;
        s.store_steps = q.steps[i];
        s.n_steps = q.steps[i] * q.substeps;
        s.n_paths = q.n_paths;
        s.ladder = {q.rung};
        BsdeNumerics num = c_.numerics;
        num.bins = q.bins;
        num.keep_paths = true;
        const auto sol = solve_localized(simulate(model, s), gen, term, Branch::natural, q.rung, num);
        const auto r = exp_transform_check(sol, alpha);
        const double ratio = i == 0 ? std::nan("") : prev / r.mean_abs;
        t.add(q.steps[i], alpha, r.mean_abs, r.max_abs, ratio);
        rows.push_back({{"n_steps", q.steps[i]}, {"alpha", alpha}, {"mean_abs", r.mean_abs},
                        {"max_abs", r.max_abs}, {"count", r.count}});
        if (i > 0)
          add_check("quadcheck.alpha" + fmt(alpha) + ".steps" + std::to_string(q.steps[i]), ratio,
                    c_.check.quad_ratio, 0, ratio >= c_.check.quad_ratio);
        prev = r.mean_abs;
      }
    }
    w_.csv("quadcheck.csv", t);
    w_.json("quadcheck.json", json{{"command", "quadcheck"}, {"rows", rows}, {"bins", q.bins}},
            c_.simulation.seed, seconds_since(t0));
  }

  const ExperimentConfig& c_;
  ReportWriter w_;
  BatchPtr batch_;
  std::vector<CheckRow> checks_;
};

}  // namespace

RunOutcome run_command(const std::string& command, const ExperimentConfig& config, bool check) {
  Runner runner(config);
  if (command == "full-report") {
    for (const auto& c : config.commands) runner.run(c);
    return runner.finish(check);
  }
  runner.run(command);
  return runner.finish(false);
}

}  // namespace slm
