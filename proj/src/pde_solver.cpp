#include "slmlab/pde_solver.hpp"

#include <algorithm>
#include <cmath>

namespace slm {

PdeGrid make_grid(const DiffusionModel& model, double rung, double dx, double dt, double T,
                  double eps) {
  if (model.dim() != 1) throw ConfigError("pde solver handles 1-d models only");
  if (!(dx > 0.0) || !(dt > 0.0) || !(T > 0.0)) throw ConfigError("mesh sizes and T must be positive");
  PdeGrid g;
  g.rung = rung;
  g.T = T;
  g.x_min = model.zero_boundary_sigma() ? 0.0 : eps;
  if (!(rung > g.x_min + 2 * dx)) throw ConfigError("rung too small for the space mesh");
  g.M = std::max(3, int(std::lround((rung - g.x_min) / dx)));
  g.N = std::max(1, int(std::ceil(T / dt - 1e-9)));
  return g;
}

double PdeSolution::value_at(double t, double x) const {
  const double tol = 1e-12;
  if (t < -tol || t > grid.T + tol || x < grid.x_min - tol || x > grid.rung + tol)
    throw ConfigError("evaluation point outside the pde mesh");
  const double ft = std::clamp(t / grid.dt(), 0.0, double(grid.N));
  const double fx = std::clamp((x - grid.x_min) / grid.dx(), 0.0, double(grid.M));
  const int k = std::min(int(std::floor(ft + 1e-9)), grid.N - 1);
  const int j = std::min(int(std::floor(fx + 1e-9)), grid.M - 1);
  const double a = std::clamp(ft - k, 0.0, 1.0), c = std::clamp(fx - j, 0.0, 1.0);
  return (1 - a) * ((1 - c) * values(k, j) + c * values(k, j + 1)) +
         a * ((1 - c) * values(k + 1, j) + c * values(k + 1, j + 1));
}

PdeSolution PdeSolution::from_function(const PdeGrid& grid,
                                       const std::function<double(double, double)>& u) {
  PdeSolution s;
  s.grid = grid;
  s.values.resize(grid.N + 1, grid.M + 1);
  for (int k = 0; k <= grid.N; ++k)
    for (int j = 0; j <= grid.M; ++j) s.values(k, j) = u(grid.t(k), grid.x(j));
  return s;
}

namespace {

PdeSolution solve_mix(const DiffusionModel& model, const GeneratorSpec& gen,
                      const TerminalSpec& term, double mix, const PdeGrid& grid,
                      const PdeOptions& opt) {
  if (model.dim() != 1) throw ConfigError("pde solver handles 1-d models only");
  const bool degenerate = grid.x_min == 0.0;
  if (degenerate && !model.zero_boundary_sigma())
    throw ConfigError("grid starts at 0 but the model's volatility does not vanish there");
  if (!degenerate && !opt.left_dirichlet)
    throw ConfigError("model '" + model.name() +
                      "' needs left Dirichlet data (see mc_left_dirichlet)");

  const int M = grid.M, N = grid.N;
  const double dx = grid.dx(), dt = grid.dt(), n = grid.rung;
  Eigen::VectorXd x(M + 1), sig(M + 1), L(M + 1);
  for (int j = 0; j <= M; ++j) {
    x[j] = grid.x(j);
    sig[j] = (degenerate && j == 0) ? 0.0 : model.sigma1(x[j]);
    const double xs[1] = {x[j]};
    L[j] = gen.z_lipschitz(xs) * std::abs(sig[j]);
  }

  PdeSolution sol;
  sol.grid = grid;
  sol.mix = mix;
  sol.branch = mix >= 1.0 ? Branch::natural : Branch::cutoff;
  sol.meta.degenerate_left = degenerate;
  sol.meta.steps = N;
  sol.meta.diffusion_ratio = dt * sig.cwiseAbs2().maxCoeff() / (dx * dx);
  sol.meta.monotone_number = dt * (std::abs(gen.mu()) + L.maxCoeff() / dx);
  if (sol.meta.monotone_number > 1.0)
    throw NumericalError("pde mesh violates the monotonicity bound dt(mu + L/dx) <= 1 (value " +
                         std::to_string(sol.meta.monotone_number) + ")");

  auto data = [&](double xv) {
    const double xs[1] = {xv};
    return mix * term.g(xs) + (1.0 - mix) * term.g_n(xs, n);
  };
  const double right = data(n);

  sol.values.resize(N + 1, M + 1);
  Eigen::VectorXd v(M + 1);
  for (int j = 0; j <= M; ++j) v[j] = data(x[j]);
  v[M] = right;
  if (!degenerate) v[0] = opt.left_dirichlet(grid.T);
  sol.values.row(N) = v.transpose();

  const int m = M - 1;
  Eigen::VectorXd lower(m), diag(m), upper(m), rhs(m), a(M + 1);
  for (int j = 1; j < M; ++j) a[j] = dt * sig[j] * sig[j] / (2 * dx * dx);
  for (int i = 0; i < m; ++i) {
    const int j = i + 1;
    lower[i] = -a[j];
    diag[i] = 1.0 + 2.0 * a[j];
    upper[i] = -a[j];
  }
  const bool zero_driver = gen.kind() == GeneratorKind::zero;
  Eigen::VectorXd u(M + 1);
  for (int k = N - 1; k >= 0; --k) {
    const double t1 = grid.t(k + 1), t0 = grid.t(k);
    // Explicit driver with a Lax-Friedrichs term for the z-dependence.
    for (int i = 0; i < m; ++i) {
      const int j = i + 1;
      double G = v[j];
      if (!zero_driver) {
        const double xs[1] = {x[j]};
        const double p = (v[j + 1] - v[j - 1]) / (2 * dx);
        const double z[1] = {sig[j] * p};
        const double lap = v[j + 1] - 2 * v[j] + v[j - 1];
        G += dt * (gen.f(t1, xs, v[j], z) + L[j] / (2 * dx) * lap);
      }
      rhs[i] = G;
    }
    if (degenerate) {
      const double xs[1] = {0.0};
      const double z[1] = {0.0};
      u[0] = zero_driver ? v[0] : v[0] + dt * gen.f(t1, xs, v[0], z);
    } else {
      u[0] = opt.left_dirichlet(t0);
    }
    u[M] = right;
    rhs[0] += a[1] * u[0];
    rhs[m - 1] += a[M - 1] * u[M];
    solve_tridiagonal<double>(lower, diag, upper, rhs);
    u.segment(1, m) = rhs;
    if (!u.allFinite()) throw NumericalError("pde solution not finite at time step " + std::to_string(k));
    sol.values.row(k) = u.transpose();
    v = u;
  }
  return sol;
}

// Polynomial extrapolation in h = 1/n to h = 0 through the last `m` rungs (Neville).
double extrapolate_rungs(const std::vector<double>& ladder, const std::vector<double>& v, int m) {
  const std::size_t L = ladder.size();
  m = std::max(1, std::min<int>(m, int(L)));
  std::vector<double> h, p;
  for (std::size_t i = L - std::size_t(m); i < L; ++i) {
    h.push_back(1.0 / ladder[i]);
    p.push_back(v[i]);
  }
  for (int level = 1; level < m; ++level)
    for (int i = m - 1; i >= level; --i)
      p[std::size_t(i)] = (h[std::size_t(i - level)] * p[std::size_t(i)] -
                           h[std::size_t(i)] * p[std::size_t(i - 1)]) /
                          (h[std::size_t(i - level)] - h[std::size_t(i)]);
  return p[std::size_t(m - 1)];
}

}  // namespace

PdeSolution solve_bvp(const DiffusionModel& model, const GeneratorSpec& gen,
                      const TerminalSpec& term, Branch branch, const PdeGrid& grid,
                      const PdeOptions& opt) {
  return solve_mix(model, gen, term, branch == Branch::natural ? 1.0 : 0.0, grid, opt);
}

PdeLadderResult pde_ladder(const DiffusionModel& model, const GeneratorSpec& gen,
                           const TerminalSpec& term, const std::vector<double>& ladder,
                           const PdeMesh& mesh, const std::vector<PdePoint>& points, bool refine,
                           const PdeOptions& opt, int extrapolation_points) {
  if (ladder.empty()) throw ConfigError("pde_ladder: empty ladder");
  if (!std::is_sorted(ladder.begin(), ladder.end()) ||
      std::adjacent_find(ladder.begin(), ladder.end()) != ladder.end())
    throw ConfigError("pde_ladder: ladder must be strictly increasing");
  for (const auto& p : points)
    if (p.x > ladder.front() || p.t < 0 || p.t > mesh.T)
      throw ConfigError("pde_ladder: evaluation point outside the smallest domain");

  PdeLadderResult res;
  res.ladder = ladder;
  res.points = points;
  res.refined = refine;
  const std::size_t L = ladder.size(), P = points.size();
  auto eval = [&](const PdeSolution& s) {
    std::vector<double> out(P);
    for (std::size_t i = 0; i < P; ++i) out[i] = s.value_at(points[i].t, points[i].x);
    return out;
  };
  for (double n : ladder) {
    const PdeGrid g0 = make_grid(model, n, mesh.dx, mesh.dt, mesh.T);
    auto nat = solve_bvp(model, gen, term, Branch::natural, g0, opt);
    auto cut = solve_bvp(model, gen, term, Branch::cutoff, g0, opt);
    res.u_base.push_back(eval(nat));
    res.ubar_base.push_back(eval(cut));
    if (refine) {
      const PdeGrid g1 = make_grid(model, n, mesh.dx / 2, mesh.dt / 2, mesh.T);
      nat = solve_bvp(model, gen, term, Branch::natural, g1, opt);
      cut = solve_bvp(model, gen, term, Branch::cutoff, g1, opt);
    }
    res.u.push_back(eval(nat));
    res.ubar.push_back(eval(cut));
    res.natural.push_back(std::move(nat));
    res.cutoff.push_back(std::move(cut));
  }

  const double tol = 1e-10;
  for (std::size_t r = 1; r < L; ++r)
    for (std::size_t i = 0; i < P; ++i) {
      const double scale = std::max(1.0, std::abs(res.ubar[r][i]));
      if (res.ubar[r][i] < res.ubar[r - 1][i] - tol * scale) {
        res.cutoff_monotone = false;
        res.warnings.push_back("cutoff branch not monotone in n at point " + std::to_string(i));
      }
      if (res.u[r][i] < res.u[r - 1][i] - tol * std::max(1.0, std::abs(res.u[r][i]))) {
        res.natural_monotone = false;
        if (term.satisfies_h4())
          res.warnings.push_back("natural branch not monotone in n at point " + std::to_string(i));
      }
    }

  for (std::size_t i = 0; i < P; ++i) {
    const double gl = res.u[L - 1][i] - res.ubar[L - 1][i];
    res.gap_last.push_back(gl);
    if (L >= 2) {
      std::vector<double> ucol(L), ubcol(L);
      for (std::size_t r = 0; r < L; ++r) {
        ucol[r] = res.u[r][i];
        ubcol[r] = res.ubar[r][i];
      }
      res.u_estimate.push_back(extrapolate_rungs(ladder, ucol, extrapolation_points));
      res.ubar_estimate.push_back(extrapolate_rungs(ladder, ubcol, extrapolation_points));
      const double gp = res.u[L - 2][i] - res.ubar[L - 2][i];
      double err = std::abs(gl - gp);
      if (refine) err += std::abs(gl - (res.u_base[L - 1][i] - res.ubar_base[L - 1][i]));
      res.error_estimate.push_back(err);
    } else {
      res.u_estimate.push_back(res.u[0][i]);
      res.ubar_estimate.push_back(res.ubar[0][i]);
      res.error_estimate.push_back(refine ? std::abs(gl - (res.u_base[0][i] - res.ubar_base[0][i])) : 0.0);
    }
    res.gap_estimate.push_back(res.u_estimate[i] - res.ubar_estimate[i]);
  }
  return res;
}

CrossValidation cross_validate(const PdeSolution& pde, const TwoSolutionResult& bsde,
                               const std::vector<PdePoint>& points, const SliceContext* slice,
                               double pde_tolerance) {
  int r = -1;
  for (std::size_t i = 0; i < bsde.ladder.size(); ++i)
    if (std::abs(bsde.ladder[i] - pde.grid.rung) <= 1e-12 * pde.grid.rung) r = int(i);
  if (r < 0) throw ConfigError("cross_validate: pde rung is not on the bsde ladder");
  const auto& sols = pde.branch == Branch::natural ? bsde.natural : bsde.cutoff;
  if (sols.empty()) throw ConfigError("cross_validate: bsde result carries no solutions");
  const LocalizedSolution& ls = sols[std::size_t(r)];
  if (std::abs(ls.batch->T() - pde.grid.T) > 1e-12)
    throw ConfigError("cross_validate: horizons differ");
  const double x0 = ls.batch->x0[0];

  CrossValidation cv;
  double max_se = 0.0;
  for (const auto& pt : points) {
    CrossCheck c;
    c.point = pt;
    c.pde = pde.value_at(pt.t, pt.x);
    if (pt.t == 0.0 && std::abs(pt.x - x0) <= 1e-12) {
      c.bsde = ls.y0;
      c.bsde_se = ls.se;
    } else {
      if (!slice) throw ConfigError("cross_validate: point off (0, x0) needs a re-simulation context");
      SimulationSettings sim = slice->simulation;
      sim.T = pde.grid.T - pt.t;
      sim.ladder = {pde.grid.rung};
      const auto model = slice->model.with_x0(Eigen::VectorXd::Constant(1, pt.x));
      const auto batch = simulate(model, sim);
      const auto s = solve_localized(batch, slice->generator, slice->terminal, pde.branch,
                                     pde.grid.rung, slice->numerics);
      c.bsde = s.y0;
      c.bsde_se = s.se;
    }
    c.discrepancy = c.pde - c.bsde;
    cv.max_abs = std::max(cv.max_abs, std::abs(c.discrepancy));
    max_se = std::max(max_se, c.bsde_se);
    cv.checks.push_back(c);
  }
  cv.budget = 3.0 * max_se + pde_tolerance;
  return cv;
}

PdeResidual interior_residual(const PdeSolution& pde, const DiffusionModel& model,
                              const GeneratorSpec& gen, const std::vector<PdePoint>& sample) {
  const auto& g = pde.grid;
  const double dx = g.dx(), dt = g.dt();
  PdeResidual out;
  double total = 0.0;
  auto op = [&](int k, int j, double t) {
    const auto& U = pde.values;
    const double s = model.sigma1(g.x(j));
    const double uxx = (U(k, j + 1) - 2 * U(k, j) + U(k, j - 1)) / (dx * dx);
    const double ux = (U(k, j + 1) - U(k, j - 1)) / (2 * dx);
    const double xs[1] = {g.x(j)};
    const double z[1] = {s * ux};
    return 0.5 * s * s * uxx + gen.f(t, xs, U(k, j), z);
  };
  for (const auto& p : sample) {
    const int j = int(std::lround((p.x - g.x_min) / dx));
    const int k = std::min(int(std::lround(p.t / dt)), g.N - 1);
    if (j < 2 || j > g.M - 2)
      throw ConfigError("interior_residual: sample point within 2 dx of the boundary");
    if (k < 0) throw ConfigError("interior_residual: sample time outside the mesh");
    const double ut = (pde.values(k + 1, j) - pde.values(k, j)) / dt;
    const double r = -ut - 0.5 * (op(k, j, g.t(k)) + op(k + 1, j, g.t(k + 1)));
    out.max_abs = std::max(out.max_abs, std::abs(r));
    total += std::abs(r);
    ++out.count;
  }
  out.mean_abs = out.count ? total / out.count : 0.0;
  return out;
}

std::function<double(double)> mc_left_dirichlet(const DiffusionModel& model,
                                                const GeneratorSpec& gen,
                                                const TerminalSpec& term, Branch branch,
                                                double rung, double x_min, double T, int nodes,
                                                const SimulationSettings& simulation,
                                                const BsdeNumerics& numerics) {
  if (nodes < 2) throw ConfigError("mc_left_dirichlet: need at least two time nodes");
  std::vector<double> ts(static_cast<std::size_t>(nodes)), vs(static_cast<std::size_t>(nodes));
  const auto start = model.with_x0(Eigen::VectorXd::Constant(1, x_min));
  for (int i = 0; i < nodes; ++i) {
    const double t = T * i / (nodes - 1);
    ts[std::size_t(i)] = t;
    const double h = T - t;
    if (h <= 0.0) {
      const double xs[1] = {x_min};
      vs[std::size_t(i)] = branch == Branch::natural ? term.g(xs) : term.g_n(xs, rung);
      continue;
    }
    SimulationSettings sim = simulation;
    sim.T = h;
    sim.ladder = {rung};
    const auto batch = simulate(start, sim);
    vs[std::size_t(i)] = solve_localized(batch, gen, term, branch, rung, numerics).y0;
  }
  return [ts, vs](double t) {
    if (t <= ts.front()) return vs.front();
    if (t >= ts.back()) return vs.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t i = std::size_t(it - ts.begin());
    const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return (1 - w) * vs[i - 1] + w * vs[i];
  };
}

}  // namespace slm
