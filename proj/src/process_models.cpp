#include "slmlab/process_models.hpp"

#include <algorithm>
#include <cmath>

namespace slm {

namespace {

constexpr double kBesselTol = 1e-12;

void require_positive_x0(const Eigen::VectorXd& x0) {
  if (x0.size() == 0) throw ConfigError("x0 must have at least one component");
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    if (!(x0[i] > 0.0) || !std::isfinite(x0[i]))
      throw ConfigError("x0 must be strictly positive and finite (component " + std::to_string(i) +
                        " = " + std::to_string(x0[i]) + ")");
}

Eigen::VectorXd x0_from(const ParamMap& params, int dim) {
  if (!params.has("x0")) throw ConfigError("missing parameter 'x0'");
  const auto& v = params.list("x0");
  if (int(v.size()) != dim)
    throw ConfigError("x0 has " + std::to_string(v.size()) + " components, model needs " +
                      std::to_string(dim));
  Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
  require_positive_x0(x0);
  return x0;
}

}  // namespace

DiffusionModel DiffusionModel::custom(std::string name, Eigen::VectorXd x0, SigmaFn sigma,
                                      bool zero_boundary_sigma) {
  if (!sigma) throw ConfigError("custom model needs a volatility function");
  require_positive_x0(x0);
  DiffusionModel m;
  m.name_ = std::move(name);
  m.x0_ = std::move(x0);
  m.custom_sigma_ = std::move(sigma);
  m.zero_boundary_ = zero_boundary_sigma;
  m.validate();
  return m;
}

DiffusionModel DiffusionModel::custom_1d(std::string name, double x0, Sigma1Fn sigma,
                                         bool zero_boundary_sigma) {
  if (!sigma) throw ConfigError("custom model needs a volatility function");
  DiffusionModel m;
  m.name_ = std::move(name);
  m.x0_ = Eigen::VectorXd::Constant(1, x0);
  require_positive_x0(m.x0_);
  m.custom_sigma1_ = sigma;
  m.custom_sigma_ = [sigma](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd::Constant(1, 1, sigma(x[0]));
  };
  m.zero_boundary_ = zero_boundary_sigma;
  m.validate();
  return m;
}

Eigen::MatrixXd DiffusionModel::sigma(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw ConfigError("sigma: point has wrong dimension");
  switch (kind_) {
    case ModelKind::gbm:
    case ModelKind::cev:
    case ModelKind::inverse_bessel:
    case ModelKind::loglog:
      return Eigen::MatrixXd::Constant(1, 1, sigma1(x[0]));
    case ModelKind::sin2d: {
      Eigen::Matrix2d s;
      s << x[0] * x[1], 0.0, rho_ * x[1], std::sqrt(1.0 - rho_ * rho_) * x[1];
      return s;
    }
    case ModelKind::custom:
      break;
  }
  return custom_sigma_(x);
}

double DiffusionModel::sigma1(double x) const {
  switch (kind_) {
    case ModelKind::gbm:
      return x;
    case ModelKind::cev:
      return cev_sigma(x, beta_);
    case ModelKind::inverse_bessel:
      return inverse_bessel_sigma(x);
    case ModelKind::loglog:
      return loglog_sigma(x);
    case ModelKind::sin2d:
      throw ConfigError("sigma1 called on a 2-d model");
    case ModelKind::custom:
      break;
  }
  if (dim() != 1) throw ConfigError("sigma1 called on a multi-dimensional model");
  if (custom_sigma1_) return custom_sigma1_(x);
  return custom_sigma_(Eigen::VectorXd::Constant(1, x))(0, 0);
}

// For dX = x^beta dW with beta > 1, R = X^(1-beta)/(beta-1) solves
// dR = -dW + (delta-1)/(2R) dt with delta = (2 beta - 1)/(beta - 1), a
// Bessel process of dimension delta. inverse_bessel is beta = 2 with the
// noise sign flipped.
std::optional<int> DiffusionModel::bessel_dimension() const {
  if (kind_ == ModelKind::inverse_bessel) return 3;
  if (kind_ != ModelKind::cev || beta_ <= 1.0) return std::nullopt;
  const double delta = (2.0 * beta_ - 1.0) / (beta_ - 1.0);
  const double rounded = std::round(delta);
  if (std::abs(delta - rounded) > kBesselTol || rounded > 64) return std::nullopt;
  return int(rounded);
}

double DiffusionModel::to_bessel_radius(double x) const {
  if (kind_ == ModelKind::inverse_bessel) return 1.0 / x;
  return std::pow(x, 1.0 - beta_) / (beta_ - 1.0);
}

double DiffusionModel::from_bessel_radius(double r) const {
  if (kind_ == ModelKind::inverse_bessel) return 1.0 / r;
  return std::pow((beta_ - 1.0) * r, -1.0 / (beta_ - 1.0));
}

double DiffusionModel::bessel_noise_sign() const {
  return kind_ == ModelKind::inverse_bessel ? 1.0 : -1.0;
}

DiffusionModel DiffusionModel::with_x0(const Eigen::VectorXd& x0) const {
  if (x0.size() != dim()) throw ConfigError("with_x0: wrong dimension");
  require_positive_x0(x0);
  DiffusionModel m = *this;
  m.x0_ = x0;
  std::vector<double> v(x0.data(), x0.data() + x0.size());
  m.params_.set("x0", v);
  return m;
}

// Samples a small grid, checks finiteness and bounded difference quotients.
void DiffusionModel::validate() const {
  static const double pts[] = {0.05, 0.3, 1.0, 2.5, 7.0};
  const int d = dim();
  const int total = int(std::pow(5, d));
  for (int idx = 0; idx < total; ++idx) {
    Eigen::VectorXd x(d);
    int rem = idx;
    for (int i = 0; i < d; ++i) {
      x[i] = pts[rem % 5];
      rem /= 5;
    }
    const Eigen::MatrixXd s = sigma(x);
    if (s.rows() != d || s.cols() != d)
      throw ConfigError("model '" + name_ + "': sigma must be a " + std::to_string(d) + "x" +
                        std::to_string(d) + " matrix");
    if (!s.allFinite()) throw ConfigError("model '" + name_ + "': sigma not finite on test grid");
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd xh = x;
      const double h = 1e-6 * x[i];
      xh[i] += h;
      const double q = (sigma(xh) - s).norm() / h;
      if (!std::isfinite(q) || q > 1e12)
        throw ConfigError("model '" + name_ + "': sigma not locally Lipschitz near test point");
    }
  }
}

DiffusionModel make_builtin_model(const std::string& name, const ParamMap& params) {
  DiffusionModel m;
  m.name_ = name;
  m.params_ = params;
  if (name == "inverse_bessel") {
    m.kind_ = ModelKind::inverse_bessel;
    m.x0_ = x0_from(params, 1);
  } else if (name == "gbm") {
    m.kind_ = ModelKind::gbm;
    m.x0_ = x0_from(params, 1);
  } else if (name == "cev") {
    m.kind_ = ModelKind::cev;
    m.x0_ = x0_from(params, 1);
    m.beta_ = params.get("beta");
    if (!(m.beta_ > 0.0)) throw ConfigError("cev: beta must be positive");
  } else if (name == "sin2d") {
    m.kind_ = ModelKind::sin2d;
    m.x0_ = x0_from(params, 2);
    m.rho_ = params.get("rho");
    if (!(std::abs(m.rho_) <= 1.0)) throw ConfigError("sin2d: |rho| must not exceed 1");
  } else if (name == "loglog") {
    m.kind_ = ModelKind::loglog;
    m.x0_ = x0_from(params, 1);
  } else {
    throw ConfigError("unknown model '" + name + "'");
  }
  m.validate();
  return m;
}

TerminalSpec TerminalSpec::custom(std::string name, Fn g, double slope_K, double cutoff_width,
                                  bool satisfies_h4) {
  if (!g) throw ConfigError("custom terminal needs a function");
  if (!(slope_K >= 0.0)) throw ConfigError("terminal slope K must be nonnegative");
  if (!(cutoff_width > 0.0)) throw ConfigError("cutoff_width must be positive");
  TerminalSpec t;
  t.name_ = std::move(name);
  t.custom_ = std::move(g);
  t.slope_K_ = slope_K;
  t.asymptotic_slope_ = slope_K;
  t.cutoff_width_ = cutoff_width;
  t.h4_ = satisfies_h4;
  return t;
}

double TerminalSpec::g(std::span<const double> x) const {
  double s = 0.0;
  for (double v : x) s += v;
  switch (kind_) {
    case TerminalKind::identity:
      return s;
    case TerminalKind::call:
      return std::max(s - strike_, 0.0);
    case TerminalKind::bounded:
      return std::min(s, cap_);
    case TerminalKind::zero:
      return 0.0;
    case TerminalKind::custom:
      break;
  }
  return custom_(Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(x.size())));
}

double TerminalSpec::gbar(std::span<const double> x) const {
  double s = 0.0;
  for (double v : x) s += v;
  return slope_K_ * (1.0 + s) - g(x);
}

double TerminalSpec::h(std::span<const double> x, double n) const {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  const double r = std::sqrt(r2);
  return std::clamp((n - r) / cutoff_width_, 0.0, 1.0);
}

TerminalSpec TerminalSpec::with_cutoff_width(double w) const {
  if (!(w > 0.0)) throw ConfigError("cutoff_width must be positive");
  TerminalSpec t = *this;
  t.cutoff_width_ = w;
  return t;
}

TerminalSpec make_terminal(const std::string& name, const ParamMap& params) {
  TerminalSpec t;
  t.name_ = name;
  t.cutoff_width_ = params.get("cutoff_width", 1.0);
  if (!(t.cutoff_width_ > 0.0)) throw ConfigError("cutoff_width must be positive");
  if (name == "identity") {
    t.kind_ = TerminalKind::identity;
    t.slope_K_ = t.asymptotic_slope_ = 1.0;
    t.h4_ = true;
  } else if (name == "call") {
    t.kind_ = TerminalKind::call;
    t.strike_ = params.get("strike", 1.0);
    if (t.strike_ < 0.0) throw ConfigError("call: negative strike");
    t.slope_K_ = t.asymptotic_slope_ = 1.0;
    t.h4_ = true;
  } else if (name == "bounded") {
    t.kind_ = TerminalKind::bounded;
    t.cap_ = params.get("cap", 1.0);
    if (t.cap_ < 0.0) throw ConfigError("bounded: negative cap");
    // H1 needs sup g/(1+r) = M/(1+M); the asymptotic slope is 0.
    t.slope_K_ = t.cap_ / (1.0 + t.cap_);
    t.asymptotic_slope_ = 0.0;
    t.h4_ = false;
  } else if (name == "zero") {
    t.kind_ = TerminalKind::zero;
    t.h4_ = true;
  } else {
    throw ConfigError("unknown terminal '" + name + "'");
  }
  return t;
}

GeneratorSpec GeneratorSpec::custom(std::string name, Fn f, double K_tilde, double mu, double nu,
                                    bool depends_on_z, bool lipschitz_in_y) {
  if (!f) throw ConfigError("custom generator needs a function");
  if (K_tilde < 0.0) throw ConfigError("K~ must be nonnegative");
  GeneratorSpec g;
  g.name_ = std::move(name);
  g.custom_ = std::move(f);
  g.K_tilde_ = K_tilde;
  g.mu_ = mu;
  g.nu_ = nu;
  g.depends_on_z_ = depends_on_z;
  g.lipschitz_in_y_ = lipschitz_in_y;
  return g;
}

GeneratorSpec make_generator(const std::string& name, const ParamMap& params) {
  GeneratorSpec g;
  g.name_ = name;
  if (name == "zero") {
    g.kind_ = GeneratorKind::zero;
    return g;
  }
  g.alpha_ = params.get("alpha", 0.0);
  if (g.alpha_ < 0.0) throw ConfigError(name + ": alpha must be nonnegative");
  g.mu_ = g.alpha_;
  if (name == "linear_y") {
    g.kind_ = GeneratorKind::linear_y;
  } else if (name == "bounded_z") {
    g.kind_ = GeneratorKind::bounded_z;
    g.c_ = params.get("c", 0.0);
    if (g.c_ < 0.0) throw ConfigError("bounded_z: c must be nonnegative");
    g.nu_ = g.c_;
    g.K_tilde_ = g.c_;
    g.loglog_b_ = params.get("b_loglog", 0.0) != 0.0;
    g.depends_on_z_ = g.c_ > 0.0;
  } else {
    throw ConfigError("unknown generator '" + name + "'");
  }
  return g;
}

double terminal_slope_K(const std::function<double(const Eigen::VectorXd&)>& g, int dim,
                        const std::vector<double>& radii) {
  if (radii.empty()) throw ConfigError("terminal_slope_K: no radii");
  if (!std::is_sorted(radii.begin(), radii.end()) ||
      std::adjacent_find(radii.begin(), radii.end()) != radii.end())
    throw ConfigError("terminal_slope_K: radii must be strictly increasing");
  double sup = 0.0;
  std::vector<double> q(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(dim, radii[i] / dim);
    const double v = g(x);
    if (!std::isfinite(v)) throw NumericalError("terminal_slope_K: g not finite at radius " +
                                                std::to_string(radii[i]));
    q[i] = v / (1.0 + radii[i]);
    sup = std::max(sup, q[i]);
  }
  if (radii.size() < 2) return sup;
  const std::size_t n = radii.size();
  const double a1 = 1.0 + radii[n - 2], a2 = 1.0 + radii[n - 1];
  const double asymptote = (q[n - 1] * a2 - q[n - 2] * a1) / (a2 - a1);
  return std::max(sup, asymptote);
}

}  // namespace slm
