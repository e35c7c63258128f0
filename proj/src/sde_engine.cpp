#include "slmlab/sde_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "slmlab/parallel.hpp"
#include "slmlab/rng.hpp"

namespace slm {

namespace {

constexpr double kFloor = 1e-12;

// One monitoring step of a scheme. `x` holds the post-clamp state on entry
// and exit, `pre` receives the pre-clamp state, `db` the Brownian increment,
// `aux` is per-path scratch the scheme may keep between steps.
struct EulerKernel {
  const DiffusionModel& model;

  void init(const double*, double*) const {}

  void step(DrawSequence& rng, double dt, double* x, double* pre, double* db, double*) const {
    const int d = model.dim();
    const double sq = std::sqrt(dt);
    for (int i = 0; i < d; ++i) db[i] = sq * rng.normal();
    switch (model.kind()) {
      case ModelKind::sin2d: {
        const double rho = model.rho(), rc = std::sqrt(1.0 - rho * rho);
        pre[0] = x[0] + x[0] * x[1] * db[0];
        pre[1] = x[1] + x[1] * (rho * db[0] + rc * db[1]);
        break;
      }
      case ModelKind::custom:
        if (d > 1) {
          const Eigen::Map<const Eigen::VectorXd> xv(x, d);
          const Eigen::Map<const Eigen::VectorXd> dbv(db, d);
          Eigen::Map<Eigen::VectorXd>(pre, d) = xv + model.sigma(xv) * dbv;
          break;
        }
        [[fallthrough]];
      default:
        pre[0] = x[0] + model.sigma1(x[0]) * db[0];
    }
    for (int i = 0; i < d; ++i) x[i] = std::max(pre[i], kFloor);
  }
};

// Exact Bessel(delta) radial step from the noncentral chi-square law:
// R'^2 = (R + sqrt(dt) Z)^2 + dt * chi2_{delta-1}. Z is the Brownian
// increment along the current radial direction and drives the 1-d noise.
struct BesselKernel {
  const DiffusionModel& model;
  int delta;

  void init(const double* x, double* aux) const { aux[0] = model.to_bessel_radius(x[0]); }

  // chi2 with m degrees of freedom: m/2 exponentials (-2 log U) plus one
  // squared normal when m is odd.
  void step(DrawSequence& rng, double dt, double* x, double* pre, double* db, double* aux) const {
    const int m = delta - 1;
    const double z = rng.normal();
    double chi2 = 0.0;
    if (m % 2 == 1) {
      const double w = rng.normal();
      chi2 = w * w;
    }
    for (int j = 0; j < m / 2; ++j) chi2 -= 2.0 * std::log(rng.uniform());
    const double sq = std::sqrt(dt);
    const double a = aux[0] + sq * z;
    aux[0] = std::sqrt(a * a + dt * chi2);
    x[0] = model.from_bessel_radius(aux[0]);
    pre[0] = x[0];
    db[0] = model.bessel_noise_sign() * sq * z;
  }
};

PathBatch allocate(const DiffusionModel& model, const Eigen::VectorXd& times, int substeps,
                   long n_paths, std::uint64_t seed, std::vector<double> ladder,
                   std::string scheme, bool keep_noise, bool keep_interval_max) {
  if (n_paths < 1) throw ConfigError("n_paths must be at least 1");
  if (times.size() < 2) throw ConfigError("time grid needs at least two points");
  if (times[0] != 0.0) throw ConfigError("time grid must start at 0");
  for (Eigen::Index k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw ConfigError("time grid must be strictly increasing");
  if (!std::is_sorted(ladder.begin(), ladder.end()) ||
      std::adjacent_find(ladder.begin(), ladder.end()) != ladder.end())
    throw ConfigError("ladder radii must be strictly increasing");
  const double x0norm = model.x0().norm();
  for (double r : ladder)
    if (!(r > x0norm))
      throw ConfigError("ladder radius " + std::to_string(r) + " does not exceed |x0|");

  PathBatch b;
  b.dim = model.dim();
  b.scheme = std::move(scheme);
  b.seed = seed;
  b.x0 = model.x0();
  b.times = times;
  b.substeps = substeps;
  b.ladder = std::move(ladder);
  const int K = int(times.size()) - 1;
  const int R = int(b.ladder.size());
  for (int i = 0; i < b.dim; ++i) {
    b.states.emplace_back(n_paths, K + 1);
    if (keep_noise) b.noise.emplace_back(n_paths, K);
    b.exit_states.emplace_back(n_paths, R);
  }
  if (keep_interval_max) b.interval_max.resize(n_paths, K);
  b.sup_sum.resize(n_paths);
  b.exit_step.setConstant(n_paths, R, K * substeps);
  return b;
}

template <typename Kernel>
void fill(PathBatch& b, const Kernel& kernel, int workers) {
  const Philox4x32 gen(b.seed);
  const int d = b.dim, K = b.n_store(), sub = b.substeps;
  const int R = int(b.ladder.size());
  parallel_for(std::size_t(b.n_paths()), workers, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> x(d), pre(d), db(d), acc(d);
    double aux[4] = {0, 0, 0, 0};
    for (std::size_t pu = lo; pu < hi; ++pu) {
      const Eigen::Index p = Eigen::Index(pu);
      DrawSequence rng(gen, pu);
      for (int i = 0; i < d; ++i) {
        x[i] = b.x0[i];
        b.states[i](p, 0) = x[i];
      }
      kernel.init(x.data(), aux);
      double sup = b.x0.sum();
      int next_rung = 0;
      for (int k = 0; k < K; ++k) {
        const double dt = (b.times[k + 1] - b.times[k]) / sub;
        std::fill(acc.begin(), acc.end(), 0.0);
        double imax = 0.0;
        for (int j = 0; j < sub; ++j) {
          const int s = k * sub + j;
          kernel.step(rng, dt, x.data(), pre.data(), db.data(), aux);
          double r2 = 0.0, sum = 0.0;
          for (int i = 0; i < d; ++i) {
            if (!std::isfinite(pre[i]))
              throw NumericalError("non-finite state at step " + std::to_string(s + 1) +
                                   ", path " + std::to_string(p));
            acc[i] += db[i];
            r2 += pre[i] * pre[i];
            sum += x[i];
          }
          const double r = std::sqrt(r2);
          imax = std::max(imax, r);
          sup = std::max(sup, sum);
          while (next_rung < R && r > b.ladder[next_rung]) {
            b.exit_step(p, next_rung) = s + 1;
            for (int i = 0; i < d; ++i) b.exit_states[i](p, next_rung) = x[i];
            ++next_rung;
          }
        }
        for (int i = 0; i < d; ++i) {
          b.states[i](p, k + 1) = x[i];
          if (!b.noise.empty()) b.noise[i](p, k) = acc[i];
        }
        if (b.interval_max.size() > 0) b.interval_max(p, k) = imax;
      }
      b.sup_sum[p] = sup;
      // Paths that never exit carry their terminal state as the stopped value.
      for (int r = next_rung; r < R; ++r)
        for (int i = 0; i < d; ++i) b.exit_states[i](p, r) = x[i];
    }
  });
}

Eigen::VectorXd uniform_grid(double T, int n) {
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (n < 1) throw ConfigError("n_steps must be at least 1");
  Eigen::VectorXd t(n + 1);
  for (int k = 0; k <= n; ++k) t[k] = T * double(k) / double(n);
  return t;
}

}  // namespace

double PathBatch::fine_time(int step) const {
  const int k = std::min(step / substeps, n_store() - 1);
  const int j = step - k * substeps;
  return times[k] + (times[k + 1] - times[k]) * double(j) / double(substeps);
}

double PathBatch::state_sum(Eigen::Index path, int k) const {
  double s = 0.0;
  for (const auto& m : states) s += m(path, k);
  return s;
}

Eigen::VectorXd PathBatch::state_vector(Eigen::Index path, int k) const {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = states[i](path, k);
  return v;
}

Eigen::VectorXd PathBatch::exit_state(Eigen::Index path, int rung) const {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = exit_states[i](path, rung);
  return v;
}

int PathBatch::rung_index(double radius) const {
  for (std::size_t i = 0; i < ladder.size(); ++i)
    if (std::abs(ladder[i] - radius) <= 1e-12 * std::max(1.0, radius)) return int(i);
  return -1;
}

int PathBatch::exit_index(Eigen::Index path, int rung) const {
  const int s = exit_step(path, rung);
  return (s + substeps - 1) / substeps;
}

double PathBatch::exit_time(Eigen::Index path, int rung) const {
  return fine_time(exit_step(path, rung));
}

BatchPtr simulate(const DiffusionModel& model, const SimulationSettings& s) {
  if (s.n_steps < 1) throw ConfigError("n_steps must be at least 1");
  const int store = s.store_steps > 0 ? s.store_steps : s.n_steps;
  if (s.n_steps % store != 0)
    throw ConfigError("store_steps (" + std::to_string(store) + ") must divide n_steps (" +
                      std::to_string(s.n_steps) + ")");
  const auto times = uniform_grid(s.T, store);
  const int sub = s.n_steps / store;

  const auto delta = model.bessel_dimension();
  bool exact = false;
  if (s.scheme == "exact") {
    if (!delta) throw ConfigError("no exact sampler for model '" + model.name() + "'");
    exact = true;
  } else if (s.scheme == "auto") {
    exact = delta.has_value();
  } else if (s.scheme != "euler") {
    throw ConfigError("unknown scheme '" + s.scheme + "'");
  }

  auto b = std::make_shared<PathBatch>(
      allocate(model, times, sub, s.n_paths, s.seed, s.ladder,
               exact ? "exact_bessel" + std::to_string(*delta) : "euler", s.keep_noise,
               s.keep_interval_max));
  if (exact)
    fill(*b, BesselKernel{model, *delta}, s.workers);
  else
    fill(*b, EulerKernel{model}, s.workers);
  return b;
}

PathBatch simulate_paths(const DiffusionModel& model, double T, int n_steps, long n_paths,
                         std::uint64_t seed, const std::vector<double>& ladder) {
  SimulationSettings s;
  s.T = T;
  s.n_steps = n_steps;
  s.n_paths = n_paths;
  s.seed = seed;
  s.ladder = ladder;
  s.scheme = "euler";
  return *simulate(model, s);
}

PathBatch simulate_inverse_bessel_exact(double x0, const Eigen::VectorXd& times, long n_paths,
                                        std::uint64_t seed, const std::vector<double>& ladder) {
  ParamMap p;
  p.set("x0", x0);
  const auto model = make_builtin_model("inverse_bessel", p);
  PathBatch b = allocate(model, times, 1, n_paths, seed, ladder, "exact_bessel3", true, true);
  fill(b, BesselKernel{model, 3}, 1);
  return b;
}

Eigen::VectorXi first_exit_index(const PathBatch& b, double radius) {
  if (!(radius > b.x0.norm()))
    throw ConfigError("first_exit_index: radius must exceed |x0| (exit at time 0 is disallowed)");
  if (b.interval_max.size() == 0)
    throw ConfigError("first_exit_index: batch was built without interval maxima");
  const int K = b.n_store();
  Eigen::VectorXi out(b.n_paths());
  for (Eigen::Index p = 0; p < b.n_paths(); ++p) {
    int k = 0;
    while (k < K && !(b.interval_max(p, k) > radius)) ++k;
    out[p] = k < K ? k + 1 : K;
  }
  return out;
}

Estimate mc_mean(const PathBatch& b, const PathFunctional& f) {
  if (b.n_paths() == 0) throw ConfigError("mc_mean: empty batch");
  Eigen::VectorXd v(b.n_paths());
  for (Eigen::Index p = 0; p < b.n_paths(); ++p) {
    v[p] = f(b, p);
    if (!std::isfinite(v[p]))
      throw NumericalError("mc_mean: functional not finite on path " + std::to_string(p));
  }
  return mean_and_se(v);
}

namespace {

constexpr char kMagic[8] = {'S', 'L', 'M', 'B', 'A', 'T', 'C', '1'};

template <typename T>
void put(std::ostream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& i) {
  T v;
  i.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!i) throw ConfigError("truncated batch file");
  return v;
}
void put_doubles(std::ostream& o, const double* p, std::size_t n) {
  o.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
}
void get_doubles(std::istream& i, double* p, std::size_t n) {
  i.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
  if (!i) throw ConfigError("truncated batch file");
}

}  // namespace

// Layout: magic, header (seed, scheme, dim, sizes, grid, ladder), then
// row-major arrays [path][time][component].
void dump_batch(const PathBatch& b, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw ConfigError("cannot write batch file '" + path + "'");
  o.write(kMagic, 8);
  put(o, b.seed);
  put(o, std::uint32_t(b.scheme.size()));
  o.write(b.scheme.data(), std::streamsize(b.scheme.size()));
  put(o, std::int32_t(b.dim));
  put(o, std::int64_t(b.n_paths()));
  put(o, std::int32_t(b.n_store()));
  put(o, std::int32_t(b.substeps));
  put(o, std::int32_t(b.ladder.size()));
  put(o, std::uint8_t(!b.noise.empty()));
  put(o, std::uint8_t(b.interval_max.size() > 0));
  put_doubles(o, b.x0.data(), std::size_t(b.dim));
  put_doubles(o, b.times.data(), std::size_t(b.times.size()));
  put_doubles(o, b.ladder.data(), b.ladder.size());
  const int K = b.n_store(), R = int(b.ladder.size());
  std::vector<double> row;
  for (Eigen::Index p = 0; p < b.n_paths(); ++p) {
    row.clear();
    for (int k = 0; k <= K; ++k)
      for (int i = 0; i < b.dim; ++i) row.push_back(b.states[i](p, k));
    if (!b.noise.empty())
      for (int k = 0; k < K; ++k)
        for (int i = 0; i < b.dim; ++i) row.push_back(b.noise[i](p, k));
    if (b.interval_max.size() > 0)
      for (int k = 0; k < K; ++k) row.push_back(b.interval_max(p, k));
    row.push_back(b.sup_sum[p]);
    for (int r = 0; r < R; ++r) {
      row.push_back(double(b.exit_step(p, r)));
      for (int i = 0; i < b.dim; ++i) row.push_back(b.exit_states[i](p, r));
    }
    put_doubles(o, row.data(), row.size());
  }
  if (!o) throw ConfigError("failed writing batch file '" + path + "'");
}

PathBatch load_batch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read batch file '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError("not a batch file: " + path);
  PathBatch b;
  b.seed = get<std::uint64_t>(in);
  b.scheme.resize(get<std::uint32_t>(in));
  in.read(b.scheme.data(), std::streamsize(b.scheme.size()));
  b.dim = get<std::int32_t>(in);
  const auto n = get<std::int64_t>(in);
  const int K = get<std::int32_t>(in);
  b.substeps = get<std::int32_t>(in);
  const int R = get<std::int32_t>(in);
  const bool has_noise = get<std::uint8_t>(in) != 0;
  const bool has_imax = get<std::uint8_t>(in) != 0;
  b.x0.resize(b.dim);
  get_doubles(in, b.x0.data(), std::size_t(b.dim));
  b.times.resize(K + 1);
  get_doubles(in, b.times.data(), std::size_t(K + 1));
  b.ladder.resize(std::size_t(R));
  get_doubles(in, b.ladder.data(), std::size_t(R));
  for (int i = 0; i < b.dim; ++i) {
    b.states.emplace_back(n, K + 1);
    if (has_noise) b.noise.emplace_back(n, K);
    b.exit_states.emplace_back(n, R);
  }
  if (has_imax) b.interval_max.resize(n, K);
  b.sup_sum.resize(n);
  b.exit_step.resize(n, R);
  const std::size_t width = std::size_t((K + 1) * b.dim + (has_noise ? K * b.dim : 0) +
                                        (has_imax ? K : 0) + 1 + R * (1 + b.dim));
  std::vector<double> row(width);
  for (Eigen::Index p = 0; p < n; ++p) {
    get_doubles(in, row.data(), width);
    std::size_t c = 0;
    for (int k = 0; k <= K; ++k)
      for (int i = 0; i < b.dim; ++i) b.states[i](p, k) = row[c++];
    if (has_noise)
      for (int k = 0; k < K; ++k)
        for (int i = 0; i < b.dim; ++i) b.noise[i](p, k) = row[c++];
    if (has_imax)
      for (int k = 0; k < K; ++k) b.interval_max(p, k) = row[c++];
    b.sup_sum[p] = row[c++];
    for (int r = 0; r < R; ++r) {
      b.exit_step(p, r) = int(row[c++]);
      for (int i = 0; i < b.dim; ++i) b.exit_states[i](p, r) = row[c++];
    }
  }
  return b;
}

}  // namespace slm
