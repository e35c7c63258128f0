#include "slmlab/mart_classifier.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slmlab/errors.hpp"
#include "slmlab/numerics.hpp"
#include "slmlab/parallel.hpp"
#include "slmlab/rng.hpp"

namespace slm {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::martingale:
      return "martingale";
    case Verdict::strict_local_martingale:
      return "strict_local_martingale";
    case Verdict::inconclusive:
      break;
  }
  return "inconclusive";
}

const Evidence* ClassifierReport::find(const std::string& criterion) const {
  for (const auto& e : evidence)
    if (e.criterion == criterion) return &e;
  return nullptr;
}

namespace {

json evidence_json(const std::vector<Evidence>& ev) {
  json rows = json::array();
  for (const auto& e : ev)
    rows.push_back({{"criterion", e.criterion},
                    {"value", e.value},
                    {"threshold", e.threshold},
                    {"pass", e.pass},
                    {"note", e.note}});
  return rows;
}

}  // namespace

std::string ClassifierReport::to_json() const {
  json j = {{"subject", subject}, {"verdict", slm::to_string(verdict)},
            {"evidence", evidence_json(evidence)}};
  j["confidence"] = confidence ? json(*confidence) : json(nullptr);
  return j.dump(2);
}

// ---------------------------------------------------------------- Feller

ClassifierReport feller_test(const std::function<double(double)>& sigma_1d, double c_lower,
                             const FellerSettings& s) {
  if (!(c_lower > 0.0)) throw ConfigError("feller_test: c_lower must be positive");
  ClassifierReport rep;
  rep.subject = "feller";
  auto integrand = [&](double r) {
    const double sg = sigma_1d(r);
    if (sg == 0.0) throw NumericalError("feller_test: sigma vanishes at r = " + std::to_string(r));
    return r / (sg * sg);
  };
  auto piece = [&](double a, double b) {
    try {
      return integrate(integrand, a, b, 1e-13);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("feller_test: ") + e.what());
    }
  };

  double R = 2.0 * c_lower;
  double total = piece(c_lower, R);
  std::vector<double> inc;
  double tail = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int k = 0; k < s.max_doublings; ++k) {
    const double d = piece(R, 2.0 * R);
    total += d;
    R *= 2.0;
    inc.push_back(d);
    if (inc.size() < 3) continue;
    const double q1 = inc[inc.size() - 1] / inc[inc.size() - 2];
    const double q0 = inc[inc.size() - 2] / inc[inc.size() - 3];
    // Geometric tail (Richardson over the doubling sequence), trusted only
    // once the ratio has settled.
    if (q1 >= 0.0 && q1 < s.ratio_ceiling && std::abs(q1 - q0) < 0.05) {
      tail = d * q1 / (1.0 - q1);
      if (tail < s.tail_tol && d < s.tail_tol) {
        converged = true;
        break;
      }
    }
  }

  const double last = inc.back();
  const double slope = last / std::numbers::ln2;
  // Raabe statistic on the doubling index: -> 1 for harmonic-like
  // increments (log log growth), > 1 for summable power laws.
  const double kidx = std::log2(R / 2.0);
  const double raabe = inc.size() >= 2 && last > 0.0
                           ? kidx * (inc[inc.size() - 2] / last - 1.0)
                           : std::numeric_limits<double>::infinity();

  rep.evidence.push_back({"feller.partial_integral", total, R, true,
                          "integral of r/sigma^2 over [c, R], threshold column holds R"});
  if (converged) {
    rep.evidence.push_back({"feller.integral", total + tail, s.tail_tol, true,
                            "partial integral plus geometric tail estimate"});
    rep.evidence.push_back({"feller.tail", tail, s.tail_tol, true, "converged"});
    rep.verdict = Verdict::strict_local_martingale;
    return rep;
  }
  rep.evidence.push_back({"feller.tail", tail, s.tail_tol, false, "no convergence certified"});
  const bool slope_div = slope >= s.slope_floor;
  rep.evidence.push_back({"feller.slope", slope, s.slope_floor, slope_div,
                          "increment per doubling over log 2"});
  const bool raabe_div = !slope_div && last > 0.0 && raabe < s.raabe_ceiling;
  rep.evidence.push_back({"feller.raabe", raabe, s.raabe_ceiling, raabe_div,
                          "harmonic-like increments diverge"});
  rep.verdict = slope_div || raabe_div ? Verdict::martingale : Verdict::inconclusive;
  return rep;
}

double feller_lower_limit(const DiffusionModel&) { return 1.0; }

// ---------------------------------------------------------------- defect

namespace {

void defect_verdict(DefectResult& r, double thr) {
  r.z = r.se > 0.0 ? r.defect / r.se : (r.defect == 0.0 ? 0.0 : std::copysign(1e300, r.defect));
  ClassifierReport& rep = r.report;
  rep.subject = "defect";
  rep.confidence = r.z;
  const bool strict = r.z > thr, mart = std::abs(r.z) < thr;
  rep.evidence.push_back({"defect.value", r.defect, 0.0, true, "sum x0 - E[sum X_T], " + r.method});
  rep.evidence.push_back({"defect.se", r.se, 0.0, true, ""});
  rep.evidence.push_back({"defect.z", r.z, thr, strict || mart,
                          strict ? "one-sided: strict" : mart ? "two-sided: martingale"
                                                              : "significantly negative"});
  rep.verdict = strict ? Verdict::strict_local_martingale
                       : mart ? Verdict::martingale : Verdict::inconclusive;
}

// For sin2d, X^2 is a geometric Brownian motion and E[X^1_T] = x1 Q(no
// explosion), where under the Foellmer measure 1/X^2 hits zero exactly when
// rho int_0^t exp(W_s - s/2) ds reaches 1/x2.
DefectResult follmer_sin2d(const DiffusionModel& m, const DefectSettings& s) {
  DefectResult r;
  r.method = "follmer";
  const double x1 = m.x0()[0], x2 = m.x0()[1], rho = m.rho();
  if (rho <= 0.0) {
    r.report.evidence.push_back(
        {"defect.follmer", 0.0, 0.0, true, "rho <= 0: no explosion under the Foellmer measure"});
    defect_verdict(r, s.z_threshold);
    return r;
  }
  const double level = 1.0 / (rho * x2);
  const double dt = s.T / s.n_steps, sq = std::sqrt(dt);
  const Philox4x32 gen(s.seed);
  std::vector<unsigned char> hit(std::size_t(s.n_paths), 0);
  parallel_for(hit.size(), s.workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      DrawSequence draws(gen, p);
      double w = 0.0, prev = 1.0, area = 0.0;
      for (int k = 1; k <= s.n_steps; ++k) {
        w += sq * draws.normal();
        const double cur = std::exp(w - 0.5 * k * dt);
        area += 0.5 * dt * (prev + cur);
        prev = cur;
        if (area >= level) {
          hit[p] = 1;
          break;
        }
      }
    }
  });
  double count = 0.0;
  for (unsigned char h : hit) count += h;
  const double ph = count / double(s.n_paths);
  r.defect = x1 * ph;
  r.se = x1 * std::sqrt(ph * (1.0 - ph) / double(s.n_paths - 1));
  r.report.evidence.push_back({"defect.follmer", ph, level, true,
                               "explosion probability; threshold column holds 1/(rho x2)"});
  defect_verdict(r, s.z_threshold);
  return r;
}

}  // namespace

DefectResult martingale_defect(const DiffusionModel& model, const DefectSettings& s) {
  if (s.n_paths < 2) throw ConfigError("martingale_defect: n_paths must be at least 2");
  if (!(s.T > 0.0)) throw ConfigError("martingale_defect: T must be positive");
  if (model.kind() == ModelKind::sin2d) return follmer_sin2d(model, s);

  SimulationSettings sim;
  sim.T = s.T;
  sim.n_paths = s.n_paths;
  sim.seed = s.seed;
  sim.workers = s.workers;
  sim.keep_noise = false;
  sim.keep_interval_max = false;
  const bool exact = model.bessel_dimension().has_value();
  sim.scheme = exact ? "exact" : "euler";
  sim.n_steps = exact ? 1 : s.n_steps;
  sim.store_steps = 1;
  const BatchPtr b = simulate(model, sim);

  VectorXd xt = VectorXd::Zero(b->n_paths());
  for (int c = 0; c < b->dim; ++c) xt += b->states[std::size_t(c)].col(1);
  const Estimate e = mean_and_se(xt);
  DefectResult r;
  r.method = exact ? "exact" : "euler";
  r.defect = model.x0_sum() - e.value;
  r.se = e.se;
  defect_verdict(r, s.z_threshold);
  return r;
}

ClassifierReport classify(const DiffusionModel& model, const DefectSettings& settings,
                          const FellerSettings& feller) {
  ClassifierReport rep;
  rep.subject = model.name();
  std::optional<Verdict> fv;
  if (model.dim() == 1) {
    const auto f = feller_test([&](double r) { return model.sigma1(r); },
                               feller_lower_limit(model), feller);
    fv = f.verdict;
    rep.evidence.insert(rep.evidence.end(), f.evidence.begin(), f.evidence.end());
  }
  const DefectResult d = martingale_defect(model, settings);
  rep.evidence.insert(rep.evidence.end(), d.report.evidence.begin(), d.report.evidence.end());
  rep.confidence = d.z;
  if (!fv || *fv == Verdict::inconclusive) {
    rep.verdict = d.report.verdict;
  } else if (d.report.verdict == *fv) {
    rep.verdict = *fv;
  } else {
    rep.verdict = Verdict::inconclusive;
    rep.evidence.push_back({"agreement", 0.0, 0.0, false,
                            std::string("feller says ") + to_string(*fv) + ", defect says " +
                                to_string(d.report.verdict)});
  }
  return rep;
}

// ---------------------------------------------------------------- Doob

DoobResult doob_lp_check(const PathBatch& batch, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("doob_lp_check: p must lie in (0, 1)");
  if (batch.sup_sum.size() != batch.n_paths() || batch.n_paths() < 2)
    throw ConfigError("doob_lp_check: batch has no running sup");
  const Estimate e = mean_and_se(batch.sup_sum.array().max(0.0).pow(p).matrix());
  DoobResult r;
  r.lhs = e.value;
  r.se = e.se;
  r.bound = std::pow(batch.x0.sum(), p) / (1.0 - p);
  r.pass = r.lhs <= r.bound + 3.0 * r.se;
  return r;
}

// ---------------------------------------------------------------- Lyapunov

const LyapunovClause& LyapunovReport::clause(const std::string& id) const {
  for (const auto& c : clauses)
    if (c.clause == id) return c;
  throw ConfigError("no Lyapunov clause '" + id + "'");
}

bool LyapunovReport::all_pass() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.pass; });
}

std::string LyapunovReport::to_json() const {
  json rows = json::array();
  for (const auto& c : clauses)
    rows.push_back({{"clause", c.clause},
                    {"pass", c.pass},
                    {"worst", c.worst},
                    {"needed", c.needed},
                    {"inconclusive_points", c.inconclusive_points},
                    {"note", c.note}});
  return json{{"spec", spec}, {"clauses", rows}}.dump(2);
}

namespace {

double fd_step(const VectorXd& x) { return 1e-4 * (1.0 + x.norm()); }

VectorXd fd_grad(const std::function<double(const VectorXd&)>& psi, const VectorXd& x, double h) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (psi(a) - psi(b)) / (2.0 * h);
  }
  return g;
}

MatrixXd fd_hess(const std::function<double(const VectorXd&)>& psi, const VectorXd& x, double h) {
  const Eigen::Index d = x.size();
  MatrixXd H(d, d);
  const double p0 = psi(x);
  for (Eigen::Index i = 0; i < d; ++i) {
    VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    H(i, i) = (psi(a) - 2.0 * p0 + psi(b)) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      VectorXd pp = x, pm = x, mp = x, mm = x;
      pp[i] += h, pp[j] += h;
      pm[i] += h, pm[j] -= h;
      mp[i] -= h, mp[j] += h;
      mm[i] -= h, mm[j] -= h;
      H(i, j) = H(j, i) = (psi(pp) - psi(pm) - psi(mp) + psi(mm)) / (4.0 * h * h);
    }
  }
  return H;
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

double generator_of(const MatrixXd& sig, const MatrixXd& H) {
  return 0.5 * ((sig * sig.transpose()).cwiseProduct(H)).sum();
}

std::vector<VectorXd> default_grid(int d) {
  std::vector<VectorXd> g;
  if (d == 1) {
    for (int i = 0; i <= 120; ++i) g.push_back(VectorXd::Constant(1, std::pow(10.0, -2.0 + i / 20.0)));
    return g;
  }
  std::vector<double> axis;
  for (int i = 0; i <= 16; ++i) axis.push_back(std::pow(10.0, -2.0 + i / 4.0));
  std::vector<int> idx(std::size_t(d), 0);
  while (true) {
    VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = axis[std::size_t(idx[std::size_t(k)])];
    g.push_back(x);
    int k = 0;
    while (k < d && ++idx[std::size_t(k)] == int(axis.size())) idx[std::size_t(k++)] = 0;
    if (k == d) break;
  }
  return g;
}

}  // namespace

LyapunovReport verify_lyapunov(const DiffusionModel& model, const LyapunovSpec& spec,
                               const LyapunovSettings& st) {
  if (!spec.psi) throw ConfigError("verify_lyapunov: psi is required");
  if (!(spec.lambda > 0.0)) throw ConfigError("verify_lyapunov: lambda must be positive");
  const int d = model.dim();
  const auto grid = st.grid.empty() ? default_grid(d) : st.grid;
  auto b_of = [&](const VectorXd& x) { return spec.b ? spec.b(x) : 1.0; };
  auto psi_checked = [&](const VectorXd& x) {
    const double v = spec.psi(x);
    if (!std::isfinite(v)) throw NumericalError("verify_lyapunov: psi not finite");
    if (v <= 0.0) throw NumericalError("verify_lyapunov: psi <= 0 on the grid");
    return v;
  };

  LyapunovReport rep;
  rep.spec = spec.name;
  LyapunovClause c1{"i", true, -1e300, 0.0, 0, ""}, c4{"iv", true, -1e300, 0.0, 0, ""};
  for (const auto& x : grid) {
    if (x.size() != d) throw ConfigError("verify_lyapunov: grid point has wrong dimension");
    if (x.minCoeff() <= 0.0) throw ConfigError("verify_lyapunov: grid must avoid the faces");
    const double p = psi_checked(x);
    const MatrixXd sig = model.sigma(x);

    // Clause i: L psi <= lambda (1 + psi).
    double Lpsi;
    bool ok1 = true;
    if (spec.hess_psi) {
      Lpsi = generator_of(sig, spec.hess_psi(x));
    } else {
      const double h = std::min(fd_step(x), 0.5 * x.minCoeff());
      const double a = generator_of(sig, fd_hess(psi_checked, x, h));
      const double b = generator_of(sig, fd_hess(psi_checked, x, 0.5 * h));
      ok1 = rel_close(a, b, st.fd_rel_tol);
      Lpsi = (4.0 * b - a) / 3.0;
    }
    if (!std::isfinite(Lpsi)) throw NumericalError("verify_lyapunov: non-finite derivative estimate");
    if (!ok1) {
      ++c1.inconclusive_points;
    } else {
      const double ratio = Lpsi / (1.0 + p);
      c1.needed = std::max(c1.needed, ratio);
      c1.worst = std::max(c1.worst, ratio / spec.lambda);
      if (Lpsi > spec.lambda * (1.0 + p) * (1.0 + 1e-12)) c1.pass = false;
    }

    // Clause iv: c psi >= b |grad psi sigma|.
    VectorXd g;
    bool ok4 = true;
    if (spec.grad_psi) {
      g = spec.grad_psi(x);
    } else {
      const double h = std::min(fd_step(x), 0.5 * x.minCoeff());
      const VectorXd a = fd_grad(psi_checked, x, h), b = fd_grad(psi_checked, x, 0.5 * h);
      ok4 = (a - b).norm() <= st.fd_rel_tol * std::max(b.norm(), 1e-300);
      g = (4.0 * b - a) / 3.0;
    }
    if (!g.allFinite()) throw NumericalError("verify_lyapunov: non-finite derivative estimate");
    if (!ok4) {
      ++c4.inconclusive_points;
    } else {
      const double lhs = b_of(x) * (g.transpose() * sig).norm();
      c4.needed = std::max(c4.needed, lhs / p);
      c4.worst = std::max(c4.worst, spec.c > 0.0 ? lhs / (spec.c * p) : (lhs > 0 ? 1e300 : 0.0));
      if (lhs > spec.c * p * (1.0 + 1e-12)) c4.pass = false;
    }
  }
  c1.note = "needed column: smallest lambda passing on the grid";
  c4.note = "needed column: smallest c passing on the grid";
  if (c1.inconclusive_points > 0) c1.note += "; finite differences disagreed at some points";
  if (c4.inconclusive_points > 0) c4.note += "; finite differences disagreed at some points";

  // Clause ii: psi blows up along x_i = eps -> 0 with the other coordinates at 1.
  std::vector<double> eps = st.face_eps;
  if (eps.empty())
    for (int k = 1; k <= 8; ++k) eps.push_back(std::pow(10.0, -k));
  LyapunovClause c2{"ii", true, 1e300, 0.0, 0, ""};
  for (int i = 0; i < d; ++i) {
    double prev = -1e300;
    for (double e : eps) {
      VectorXd x = VectorXd::Ones(d);
      x[i] = e;
      const double v = psi_checked(x);
      if (!(v > prev)) c2.pass = false;
      prev = v;
    }
    c2.worst = std::min(c2.worst, prev);
  }
  const double face_threshold =
      st.face_threshold > 0.0 ? st.face_threshold : 10.0 * psi_checked(VectorXd::Ones(d));
  if (c2.worst < face_threshold) c2.pass = false;
  c2.needed = face_threshold;
  c2.note = "worst column: smallest psi at the innermost eps = " + std::to_string(eps.back()) +
            "; verified only up to that threshold";

  // Clause iii: min over sum x = R of psi / R increases and ends above M.
  std::vector<double> radii = st.radii;
  if (radii.empty())
    for (int k = 0; k < 10; ++k) radii.push_back(16.0 * std::pow(4.0, k));
  LyapunovClause c3{"iii", true, 0.0, st.M, 0, ""};
  double prev = -1e300;
  for (double R : radii) {
    double m = 1e300;
    if (d == 1) {
      m = psi_checked(VectorXd::Constant(1, R)) / R;
    } else {
      for (double w : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        VectorXd x = VectorXd::Constant(d, R * (1.0 - w) / (d - 1));
        x[0] = R * w;
        m = std::min(m, psi_checked(x) / R);
      }
    }
    if (!(m > prev)) c3.pass = false;
    prev = m;
  }
  c3.worst = prev;
  if (prev < st.M) c3.pass = false;
  c3.note = "worst column: min psi/x at R = " + std::to_string(radii.back());

  rep.clauses = {c1, c2, c3, c4};
  return rep;
}

namespace {

// int_e^x (x - z) z / sigma^2(z) dz for the loglog sigma, closed form below e.
double loglog_I(double x) {
  const double e = std::numbers::e;
  if (x <= e) return x * std::log(x) - 2.0 * x + e;
  return integrate([x](double z) { return (x - z) / (z * std::log(z)); }, e, x, 1e-13);
}

double loglog_I1(double x) {
  return x <= std::numbers::e ? std::log(x) - 1.0 : std::log(std::log(x));
}

}  // namespace

LyapunovSpec loglog_lyapunov_spec(double lambda, double c) {
  LyapunovSpec s;
  s.name = "loglog: 1/x + x + I(x)";
  s.psi = [](const VectorXd& x) { return 1.0 / x[0] + x[0] + loglog_I(x[0]); };
  s.grad_psi = [](const VectorXd& x) {
    return VectorXd::Constant(1, -1.0 / (x[0] * x[0]) + 1.0 + loglog_I1(x[0]));
  };
  s.hess_psi = [](const VectorXd& x) {
    const double sg = loglog_sigma(x[0]);
    return MatrixXd::Constant(1, 1, 2.0 / std::pow(x[0], 3) + x[0] / (sg * sg));
  };
  s.b = [](const VectorXd& x) { return loglog_b(x.sum()); };
  s.lambda = lambda;
  s.c = c;
  return s;
}

LyapunovSpec gbm_lyapunov_spec(double lambda, double c) {
  LyapunovSpec s;
  s.name = "gbm: 1/x + 1 + x^2";
  s.psi = [](const VectorXd& x) { return 1.0 / x[0] + 1.0 + x[0] * x[0]; };
  s.grad_psi = [](const VectorXd& x) {
    return VectorXd::Constant(1, -1.0 / (x[0] * x[0]) + 2.0 * x[0]);
  };
  s.hess_psi = [](const VectorXd& x) {
    return MatrixXd::Constant(1, 1, 2.0 / std::pow(x[0], 3) + 2.0);
  };
  s.lambda = lambda;
  s.c = c;
  return s;
}

LyapunovSpec quadratic_lyapunov_spec(double lambda, double c) {
  LyapunovSpec s;
  s.name = "1 + |x|^2";
  s.psi = [](const VectorXd& x) { return 1.0 + x.squaredNorm(); };
  s.grad_psi = [](const VectorXd& x) { return VectorXd(2.0 * x); };
  s.hess_psi = [](const VectorXd& x) {
    return MatrixXd(2.0 * MatrixXd::Identity(x.size(), x.size()));
  };
  s.lambda = lambda;
  s.c = c;
  return s;
}

LyapunovSpec feller_recipe_spec(const DiffusionModel& model, double a, double lambda, double c) {
  if (model.dim() != 1) throw ConfigError("feller_recipe_spec: 1-d models only");
  if (!(a > 0.0)) throw ConfigError("feller_recipe_spec: anchor must be positive");
  auto s2 = [model](double z) {
    const double v = model.sigma1(z);
    return v * v;
  };
  LyapunovSpec s;
  s.name = "psi1 + psi2 (" + model.name() + ")";
  // Cauchy's formula turns the double integrals into single ones.
  s.psi = [s2, a](const VectorXd& x) {
    const double y = x[0];
    const double p1 = 2.0 * integrate([&](double z) { return (y - z) / s2(z); }, a, y, 1e-12);
    const double p2 = y + integrate([&](double z) { return (y - z) * z / s2(z); }, a, y, 1e-12);
    return p1 + p2;
  };
  s.grad_psi = [s2, a](const VectorXd& x) {
    const double y = x[0];
    return VectorXd::Constant(1, 2.0 * integrate([&](double z) { return 1.0 / s2(z); }, a, y, 1e-12) +
                                     1.0 +
                                     integrate([&](double z) { return z / s2(z); }, a, y, 1e-12));
  };
  s.hess_psi = [s2](const VectorXd& x) {
    return MatrixXd::Constant(1, 1, (2.0 + x[0]) / s2(x[0]));
  };
  s.b = [](const VectorXd&) { return 0.0; };
  s.lambda = lambda;
  s.c = c;
  return s;
}

// ---------------------------------------------------------------- Fichera

namespace {

// Linear extrapolation to eps = 0 from the last two rungs, checked against
// the previous pair.
double extrapolate_to_face(const std::vector<double>& eps, const std::vector<double>& v,
                           double tol) {
  auto lin = [&](std::size_t k) {
    return (eps[k - 1] * v[k] - eps[k] * v[k - 1]) / (eps[k - 1] - eps[k]);
  };
  const std::size_t n = eps.size();
  const double a = lin(n - 1), b = lin(n - 2);
  if (!std::isfinite(a) || std::abs(a - b) > tol * (1.0 + std::abs(a)) + 1e-3 * std::abs(a - v[n - 1]))
    throw NumericalError("fichera_check: extrapolation non-convergent");
  return a;
}

}  // namespace

FicheraReport fichera_check(const DiffusionModel& model, int face,
                            const std::vector<VectorXd>& face_grid, const std::vector<double>& ladder,
                            double tol) {
  const int d = model.dim();
  if (face < 0 || face >= d) throw ConfigError("fichera_check: face index out of range");
  if (face_grid.empty()) throw ConfigError("fichera_check: empty face grid");
  std::vector<double> eps = ladder;
  if (eps.empty())
    for (int k = 0; k < 8; ++k) eps.push_back(0.1 * std::pow(0.25, k));
  if (eps.size() < 3) throw ConfigError("fichera_check: need at least three eps values");

  auto a_of = [&](const VectorXd& x) {
    const MatrixXd s = model.sigma(x);
    return MatrixXd(s * s.transpose());
  };
  FicheraReport rep;
  rep.face = face;
  rep.degenerate = true;
  for (const auto& base : face_grid) {
    if (base.size() != d) throw ConfigError("fichera_check: grid point has wrong dimension");
    std::vector<double> drift, diag;
    for (double e : eps) {
      VectorXd x = base;
      x[face] = e;
      double div = 0.0;
      for (int j = 0; j < d; ++j) {
        const double h = j == face ? 0.5 * e * 1e-2 : 1e-4 * (1.0 + x.norm());
        VectorXd p = x, m = x;
        p[j] += h;
        m[j] -= h;
        div += (a_of(p)(face, j) - a_of(m)(face, j)) / (2.0 * h);
      }
      const double aii = a_of(x)(face, face);
      if (!std::isfinite(div) || !std::isfinite(aii))
        throw NumericalError("fichera_check: sigma sigma' not finite on the approach");
      drift.push_back(-0.5 * div);
      diag.push_back(aii);
    }
    FicheraPoint pt;
    pt.base = base;
    pt.drift_limit = extrapolate_to_face(eps, drift, 1e-6);
    pt.diffusion_limit = extrapolate_to_face(eps, diag, 1e-6);
    pt.pass = pt.drift_limit >= -tol;
    if (std::abs(pt.diffusion_limit) > tol) rep.degenerate = false;
    rep.points.push_back(pt);
  }
  rep.applicable = rep.degenerate;
  rep.pass = rep.applicable &&
             std::all_of(rep.points.begin(), rep.points.end(), [](const auto& p) { return p.pass; });
  rep.note = rep.applicable ? "sigma sigma' degenerates on the face"
                            : "degeneracy fails; criterion inapplicable";
  return rep;
}

}  // namespace slm
