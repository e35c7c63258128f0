#include "slmlab/bsde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slmlab/regression.hpp"

namespace slm {

namespace {

int require_rung(const PathBatch& b, double rung) {
  const int r = b.rung_index(rung);
  if (r < 0) throw ConfigError("rung " + std::to_string(rung) + " is not on the batch ladder");
  return r;
}

Estimate paired_difference(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return mean_and_se(a - b);
}

}  // namespace

std::vector<LocalizedSolution> solve_mixes(const BatchPtr& batch, const GeneratorSpec& gen,
                                           const TerminalSpec& term,
                                           const std::vector<double>& mixes, double rung,
                                           const BsdeNumerics& num) {
  if (!batch) throw ConfigError("solve_localized: no path batch");
  const PathBatch& b = *batch;
  const int r = require_rung(b, rung);
  if (gen.depends_on_z() && b.noise.empty())
    throw ConfigError("generator depends on z but the batch kept no Brownian increments");
  if (num.keep_paths && b.noise.empty())
    throw ConfigError("keep_paths needs Brownian increments in the batch");
  for (double m : mixes)
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("terminal mix must lie in [0, 1]");

  const Eigen::Index n = b.n_paths();
  const int K = b.n_store(), d = b.dim, sub = b.substeps, n_fine = b.n_fine();
  const std::size_t M = mixes.size();
  const double T = b.T();

  // Terminal values. Exited paths freeze at g(X_tau) (natural) or 0 (cutoff).
  Eigen::VectorXd g_exit(n), gn_term(n), g_term(n), tau(n);
  Eigen::Array<bool, Eigen::Dynamic, 1> exited(n);
  std::vector<double> xbuf(static_cast<std::size_t>(d), 0.0);
  for (Eigen::Index p = 0; p < n; ++p) {
    exited[p] = b.exit_step(p, r) < n_fine;
    tau[p] = exited[p] ? b.exit_time(p, r) : T;
    if (exited[p]) {
      for (int i = 0; i < d; ++i) xbuf[std::size_t(i)] = b.exit_states[i](p, r);
      g_exit[p] = term.g(xbuf);
      g_term[p] = gn_term[p] = 0.0;
    } else {
      for (int i = 0; i < d; ++i) xbuf[std::size_t(i)] = b.states[i](p, K);
      g_exit[p] = 0.0;
      g_term[p] = term.g(xbuf);
      gn_term[p] = term.g_n(xbuf, rung);
    }
  }

  std::vector<LocalizedSolution> out(M);
  std::vector<Eigen::VectorXd> Y(M), sup(M);
  for (std::size_t m = 0; m < M; ++m) {
    auto& s = out[m];
    s.batch = batch;
    s.rung = rung;
    s.rung_index = r;
    s.mix = mixes[m];
    s.branch = mixes[m] >= 1.0 ? Branch::natural : Branch::cutoff;
    s.sup_powers = num.sup_powers;
    const double a = mixes[m];
    Y[m] = a * (g_exit + g_term) + (1.0 - a) * gn_term;
    s.pathwise = Y[m];
    s.xi = mean_and_se(Y[m]);
    Eigen::VectorXd esc = exited.select(Y[m], Eigen::VectorXd::Zero(n));
    s.escaped_mass = mean_and_se(esc);
    s.mean_y.resize(K + 1);
    s.se_y.resize(K + 1);
    const Estimate e = mean_and_se(Y[m]);
    s.mean_y[K] = e.value;
    s.se_y[K] = e.se;
    sup[m] = Y[m];
    if (num.keep_paths) {
      s.y_paths.resize(n, K + 1);
      s.y_paths.col(K) = Y[m];
      for (int i = 0; i < d; ++i) s.z_paths.emplace_back(Eigen::MatrixXd::Zero(n, K));
    }
  }

  BasisMeta meta;
  meta.min_occupancy = std::numeric_limits<int>::max();
  double bins_total = 0.0;
  const bool zero_driver = gen.kind() == GeneratorKind::zero;
  std::vector<int> alive;
  alive.reserve(std::size_t(n));
  std::vector<const double*> coords(static_cast<std::size_t>(d));
  std::vector<double> zhat(static_cast<std::size_t>(d)), fval;

  for (int k = K - 1; k >= 0; --k) {
    alive.clear();
    for (Eigen::Index p = 0; p < n; ++p)
      if (b.exit_step(p, r) > k * sub) alive.push_back(int(p));
    const double t = b.times[k], t1 = b.times[k + 1], dt = t1 - t;
    const bool implicit = gen.mu() * dt > num.implicit_threshold;
    meta.implicit = meta.implicit || implicit;

    if (!alive.empty()) {
      for (int i = 0; i < d; ++i) coords[std::size_t(i)] = b.states[i].col(k).data();
      const Partition part = equal_mass_partition(alive, coords, num.bins, num.min_bin_paths);
      bins_total += part.n_bins();
      for (int bin = 0; bin < part.n_bins(); ++bin) {
        const int lo = part.start[std::size_t(bin)], hi = part.start[std::size_t(bin) + 1];
        const int cnt = hi - lo;
        meta.min_occupancy = std::min(meta.min_occupancy, cnt);
        meta.max_occupancy = std::max(meta.max_occupancy, cnt);
        if (cnt == 0) throw NumericalError("regression: empty bin at step " + std::to_string(k));
        fval.resize(std::size_t(cnt));
        for (std::size_t m = 0; m < M; ++m) {
          Eigen::VectorXd& y = Y[m];
          double yhat = 0.0;
          for (int j = lo; j < hi; ++j) yhat += y[part.order[std::size_t(j)]];
          yhat /= cnt;
          std::fill(zhat.begin(), zhat.end(), 0.0);
          if (!b.noise.empty() && (gen.depends_on_z() || num.keep_paths)) {
            for (int j = lo; j < hi; ++j) {
              const int p = part.order[std::size_t(j)];
              const double dev = y[p] - yhat;
              for (int i = 0; i < d; ++i) zhat[std::size_t(i)] += dev * b.noise[i](p, k);
            }
            for (int i = 0; i < d; ++i) zhat[std::size_t(i)] /= cnt * dt;
          }

          // Driver over the alive part of the step, delta = min(tau, t1) - t.
          auto driver_sum = [&](double ystar) {
            double total = 0.0;
            for (int j = lo; j < hi; ++j) {
              const int p = part.order[std::size_t(j)];
              const double delta = std::min(tau[p], t1) - t;
              for (int i = 0; i < d; ++i) xbuf[std::size_t(i)] = b.states[i](p, k);
              const double f = gen.f(t, xbuf, ystar, zhat);
              fval[std::size_t(j - lo)] = delta * f;
              total += delta * f;
            }
            return total / cnt;
          };

          double ybin = yhat;
          if (!zero_driver) {
            if (!implicit) {
              ybin = yhat + driver_sum(yhat);
            } else {
              double ycur = yhat;
              int it = 0;
              for (;;) {
                const double ynew = yhat + driver_sum(ycur);
                ++it;
                if (!std::isfinite(ynew))
                  throw NumericalError("implicit driver produced a non-finite value at step " +
                                       std::to_string(k));
                const bool done = std::abs(ynew - ycur) <= num.picard_tol * std::max(1.0, std::abs(ynew));
                ycur = ynew;
                if (done) break;
                if (it >= num.picard_max)
                  throw NumericalError("implicit Picard iteration did not converge at step " +
                                       std::to_string(k));
              }
              // Evaluate increments at the fixed point for exact telescoping.
              ybin = yhat + driver_sum(ycur);
              meta.max_picard_iterations = std::max(meta.max_picard_iterations, it);
            }
          }

          auto& s = out[m];
          for (int j = lo; j < hi; ++j) {
            const int p = part.order[std::size_t(j)];
            if (!zero_driver) s.pathwise[p] += fval[std::size_t(j - lo)];
            y[p] = ybin;
            if (num.keep_paths)
              for (int i = 0; i < d; ++i) s.z_paths[std::size_t(i)](p, k) = zhat[std::size_t(i)];
          }
        }
      }
    }
    for (std::size_t m = 0; m < M; ++m) {
      auto& s = out[m];
      sup[m] = sup[m].cwiseMax(Y[m]);
      const Estimate e = mean_and_se(Y[m]);
      s.mean_y[k] = e.value;
      s.se_y[k] = e.se;
      if (num.keep_paths) s.y_paths.col(k) = Y[m];
    }
  }

  meta.mean_bins = bins_total / K;
  if (meta.min_occupancy == std::numeric_limits<int>::max()) meta.min_occupancy = 0;
  for (std::size_t m = 0; m < M; ++m) {
    auto& s = out[m];
    s.meta = meta;
    const Estimate v = mean_and_se(s.pathwise);
    s.y0 = Y[m].mean();
    s.se = v.se;
    for (double q : num.sup_powers) s.sup_moments.push_back(mean_and_se(sup[m].array().pow(q).matrix()));
  }
  return out;
}

LocalizedSolution solve_localized(const BatchPtr& batch, const GeneratorSpec& gen,
                                  const TerminalSpec& term, Branch branch, double rung,
                                  const BsdeNumerics& num) {
  return solve_mixes(batch, gen, term, {branch == Branch::natural ? 1.0 : 0.0}, rung, num).front();
}

TwoSolutionResult solve_ladder(const BatchPtr& batch, const GeneratorSpec& gen,
                               const TerminalSpec& term, const BsdeNumerics& num) {
  if (!batch) throw ConfigError("solve_ladder: no path batch");
  const auto& ladder = batch->ladder;
  if (ladder.empty()) throw ConfigError("solve_ladder: batch has an empty ladder");
  TwoSolutionResult res;
  res.ladder = ladder;
  for (double n : ladder) {
    auto pair = solve_mixes(batch, gen, term, {1.0, 0.0}, n, num);
    res.natural.push_back(std::move(pair[0]));
    res.cutoff.push_back(std::move(pair[1]));
  }
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const auto& nat = res.natural[i];
    const auto& cut = res.cutoff[i];
    res.y0_natural.push_back({nat.y0, nat.se});
    res.y0_cutoff.push_back({cut.y0, cut.se});
    res.escaped_natural.push_back(nat.escaped_mass);
    res.escaped_cutoff.push_back(cut.escaped_mass);
    const Estimate g = paired_difference(nat.pathwise, cut.pathwise);
    res.gap.push_back(g);
    if (g.value < -3.0 * g.se) {
      res.branch_ordering = false;
      res.warnings.push_back("branch ordering violated at rung " + std::to_string(ladder[i]));
    }
    if (i == 0) continue;
    const Estimate dn = paired_difference(nat.pathwise, res.natural[i - 1].pathwise);
    const Estimate dc = paired_difference(cut.pathwise, res.cutoff[i - 1].pathwise);
    res.step_se_natural.push_back(dn.se);
    res.step_se_cutoff.push_back(dc.se);
    if (dc.value < -3.0 * dc.se) {
      res.cutoff_monotone = false;
      res.warnings.push_back("cutoff branch decreases beyond 3 s.e. at rung " + std::to_string(ladder[i]));
    }
    if (dn.value < -3.0 * dn.se) {
      res.natural_monotone = false;
      if (term.satisfies_h4())
        res.warnings.push_back("natural branch decreases beyond 3 s.e. at rung " +
                               std::to_string(ladder[i]));
    }
  }
  // Two-point Richardson in 1/n on the last two rungs.
  const std::size_t L = ladder.size();
  auto extrapolate = [&](const std::vector<Estimate>& v) {
    if (L < 2) return v.back().value;
    const double a = ladder[L - 2], c = ladder[L - 1];
    return (c * v[L - 1].value - a * v[L - 2].value) / (c - a);
  };
  res.y0_natural_extrapolated = extrapolate(res.y0_natural);
  res.y0_cutoff_extrapolated = extrapolate(res.y0_cutoff);
  res.gap_extrapolated = res.y0_natural_extrapolated - res.y0_cutoff_extrapolated;
  return res;
}

TwoSolutionResult solve_ladder(const DiffusionModel& model, const GeneratorSpec& gen,
                               const TerminalSpec& term, const SimulationSettings& settings,
                               const BsdeNumerics& num) {
  return solve_ladder(simulate(model, settings), gen, term, num);
}

std::vector<Estimate> class_d_escaped_mass(const std::vector<LocalizedSolution>& ladder) {
  std::vector<Estimate> out;
  for (const auto& s : ladder) {
    if (s.batch != ladder.front().batch)
      throw ConfigError("class_d_escaped_mass: solutions come from different path batches");
    out.push_back(s.escaped_mass);
  }
  return out;
}

FamilyResult alpha_family(const BatchPtr& batch, const GeneratorSpec& gen,
                          const TerminalSpec& term, const std::vector<double>& alphas,
                          double rung, const BsdeNumerics& num) {
  if (gen.depends_on_z() || !gen.lipschitz_in_y())
    throw ConfigError("alpha_family needs a generator independent of z and Lipschitz in y");
  if (!std::is_sorted(alphas.begin(), alphas.end()))
    throw ConfigError("alpha_family: alphas must be increasing");
  const auto sols = solve_mixes(batch, gen, term, alphas, rung, num);
  FamilyResult res;
  res.alphas = alphas;
  for (std::size_t i = 0; i < sols.size(); ++i) {
    res.y0.push_back({sols[i].y0, sols[i].se});
    if (i == 0) continue;
    const Estimate d = paired_difference(sols[i].pathwise, sols[i - 1].pathwise);
    res.step_se.push_back(d.se);
    if (d.value < -3.0 * d.se) res.nondecreasing = false;
  }
  return res;
}

ResidualStats exp_transform_check(const LocalizedSolution& s, double alpha, double y_floor) {
  if (s.y_paths.size() == 0 || s.z_paths.empty())
    throw ConfigError("exp_transform_check needs a solution solved with keep_paths");
  const PathBatch& b = *s.batch;
  const int K = b.n_store(), d = b.dim, sub = b.substeps;
  ResidualStats st;
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const double dt = b.times[k + 1] - b.times[k];
    for (Eigen::Index p = 0; p < b.n_paths(); ++p) {
      if (b.exited(p, s.rung_index) && b.exit_step(p, s.rung_index) <= (k + 1) * sub) continue;
      const double y0 = s.y_paths(p, k), y1 = s.y_paths(p, k + 1);
      if (!(y0 > y_floor) || !(y1 > y_floor))
        throw NumericalError("exp_transform_check: Y below floor at step " + std::to_string(k) +
                             ", path " + std::to_string(p));
      double q2 = 0.0, qdb = 0.0;
      for (int i = 0; i < d; ++i) {
        const double q = s.z_paths[std::size_t(i)](p, k) / y0;
        q2 += q * q;
        qdb += q * b.noise[std::size_t(i)](p, k);
      }
      const double res = std::log(y0) - std::log(y1) - dt * (alpha + 0.5 * q2) + qdb;
      total += std::abs(res);
      st.max_abs = std::max(st.max_abs, std::abs(res));
      ++st.count;
    }
  }
  st.mean_abs = st.count > 0 ? total / double(st.count) : 0.0;
  return st;
}

SupermartingaleReport supermartingale_check(const LocalizedSolution& s, double z) {
  SupermartingaleReport rep;
  const auto K = s.mean_y.size() - 1;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double inc = s.mean_y[k + 1] - s.mean_y[k];
    const double se = std::max(s.se_y[k], s.se_y[k + 1]);
    double zk = 0.0;
    if (se > 0.0)
      zk = inc / se;
    else if (inc > 1e-12 * std::max(1.0, std::abs(s.mean_y[k])))
      zk = std::numeric_limits<double>::infinity();
    rep.max_increase_z = std::max(rep.max_increase_z, zk);
  }
  if (s.xi.se > 0.0)
    rep.y0_vs_xi_z = (s.y0 - s.xi.value) / s.xi.se;
  else
    rep.y0_vs_xi_z = s.y0 >= s.xi.value - 1e-12 ? 0.0 : -std::numeric_limits<double>::infinity();
  rep.pass = rep.max_increase_z <= z && rep.y0_vs_xi_z >= -z;
  return rep;
}

double lemma22_bound(const GeneratorSpec& gen, double xi_mean, double x0_sum, double T) {
  const double C = std::exp(std::max(gen.mu(), 0.0) * T);
  return C * (xi_mean + gen.K_tilde() * (1.0 + x0_sum) * T);
}

}  // namespace slm
