#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slmlab/params.hpp"

namespace slm {

// Closed-form volatilities, usable with any scalar type Eigen understands.
template <typename Scalar>
Scalar inverse_bessel_sigma(Scalar x) {
  return -x * x;
}
template <typename Scalar>
Scalar cev_sigma(Scalar x, Scalar beta) {
  using std::pow;
  return pow(x, beta);
}
template <typename Scalar>
Scalar loglog_sigma(Scalar x) {
  using std::log;
  using std::sqrt;
  const Scalar e = Scalar(std::numbers::e);
  return x <= e ? x : x * sqrt(log(x));
}
// Lipschitz weight paired with loglog_sigma: 1 below e, e/(x sqrt(log x)) above.
template <typename Scalar>
Scalar loglog_b(Scalar x) {
  using std::log;
  using std::sqrt;
  const Scalar e = Scalar(std::numbers::e);
  return x <= e ? Scalar(1) : e / (x * sqrt(log(x)));
}

enum class ModelKind { gbm, cev, inverse_bessel, sin2d, loglog, custom };

class DiffusionModel {
 public:
  using SigmaFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
  using Sigma1Fn = std::function<double(double)>;

  // User-supplied model in any dimension. Validated on construction.
  static DiffusionModel custom(std::string name, Eigen::VectorXd x0, SigmaFn sigma,
                               bool zero_boundary_sigma);
  static DiffusionModel custom_1d(std::string name, double x0, Sigma1Fn sigma,
                                  bool zero_boundary_sigma);

  int dim() const { return int(x0_.size()); }
  const std::string& name() const { return name_; }
  ModelKind kind() const { return kind_; }
  const Eigen::VectorXd& x0() const { return x0_; }
  double x0_sum() const { return x0_.sum(); }
  bool zero_boundary_sigma() const { return zero_boundary_; }
  const ParamMap& params() const { return params_; }
  double beta() const { return beta_; }
  double rho() const { return rho_; }

  Eigen::MatrixXd sigma(const Eigen::VectorXd& x) const;
  // Scalar volatility; only for dim() == 1.
  double sigma1(double x) const;

  // Dimension of the Bessel process R = phi(X) when the model is a power
  // transform of one with integer dimension (exact sampling possible).
  std::optional<int> bessel_dimension() const;
  // Maps between X and the Bessel radius R for models with a Bessel dimension.
  double to_bessel_radius(double x) const;
  double from_bessel_radius(double r) const;
  // dB = sign * (radial Brownian increment of R).
  double bessel_noise_sign() const;

  DiffusionModel with_x0(const Eigen::VectorXd& x0) const;

 private:
  friend DiffusionModel make_builtin_model(const std::string&, const ParamMap&);
  DiffusionModel() = default;
  void validate() const;

  std::string name_;
  ModelKind kind_ = ModelKind::custom;
  Eigen::VectorXd x0_;
  bool zero_boundary_ = true;
  ParamMap params_;
  double beta_ = 1.0;
  double rho_ = 0.0;
  SigmaFn custom_sigma_;
  Sigma1Fn custom_sigma1_;
};

// inverse_bessel (sigma = -x^2), gbm, cev (beta), sin2d (rho), loglog.
// params: x0 (list), beta, rho.
DiffusionModel make_builtin_model(const std::string& name, const ParamMap& params);

enum class TerminalKind { identity, call, bounded, zero, custom };

class TerminalSpec {
 public:
  using Fn = std::function<double(const Eigen::VectorXd&)>;

  // User-supplied terminal with its H1 constant K.
  static TerminalSpec custom(std::string name, Fn g, double slope_K, double cutoff_width = 1.0,
                             bool satisfies_h4 = false);

  const std::string& name() const { return name_; }
  TerminalKind kind() const { return kind_; }
  // H1 constant sup g/(1+sum x).
  double slope_K() const { return slope_K_; }
  // lim sup g/sum x; equals slope_K whenever H4 holds.
  double asymptotic_slope() const { return asymptotic_slope_; }
  double cutoff_width() const { return cutoff_width_; }
  bool satisfies_h4() const { return h4_; }
  double strike() const { return strike_; }
  double cap() const { return cap_; }

  double g(std::span<const double> x) const;
  double g(const Eigen::VectorXd& x) const { return g(std::span<const double>(x.data(), x.size())); }
  double gbar(std::span<const double> x) const;
  double gbar(const Eigen::VectorXd& x) const {
    return gbar(std::span<const double>(x.data(), x.size()));
  }
  // Radial ramp: 1 on |x| <= n - w, 0 on |x| >= n.
  double h(std::span<const double> x, double n) const;
  double g_n(std::span<const double> x, double n) const { return g(x) * h(x, n); }
  double g_n(const Eigen::VectorXd& x, double n) const {
    return g_n(std::span<const double>(x.data(), x.size()), n);
  }

  TerminalSpec with_cutoff_width(double w) const;

 private:
  friend TerminalSpec make_terminal(const std::string&, const ParamMap&);
  TerminalSpec() = default;

  std::string name_;
  TerminalKind kind_ = TerminalKind::custom;
  double slope_K_ = 0.0;
  double asymptotic_slope_ = 0.0;
  double cutoff_width_ = 1.0;
  bool h4_ = false;
  double strike_ = 0.0;
  double cap_ = 0.0;
  Fn custom_;
};

// identity, call (strike), bounded (cap), zero. params: strike, cap, cutoff_width.
TerminalSpec make_terminal(const std::string& name, const ParamMap& params);

enum class GeneratorKind { zero, linear_y, bounded_z, custom };

class GeneratorSpec {
 public:
  using Fn = std::function<double(double, std::span<const double>, double, std::span<const double>)>;

  static GeneratorSpec custom(std::string name, Fn f, double K_tilde, double mu, double nu,
                              bool depends_on_z, bool lipschitz_in_y);

  const std::string& name() const { return name_; }
  GeneratorKind kind() const { return kind_; }

  double f(double t, std::span<const double> x, double y, std::span<const double> z) const {
    switch (kind_) {
      case GeneratorKind::zero:
        return 0.0;
      case GeneratorKind::linear_y:
        return alpha_ * y;
      case GeneratorKind::bounded_z: {
        double zz = 0.0;
        for (double v : z) zz += v * v;
        return alpha_ * y + c_ * std::min(b(x) * std::sqrt(zz), 1.0);
      }
      case GeneratorKind::custom:
        break;
    }
    return custom_(t, x, y, z);
  }

  // H(t, r) = K~ (1 + r).
  double H(double /*t*/, double r) const { return K_tilde_ * (1.0 + r); }
  double K_tilde() const { return K_tilde_; }
  double mu() const { return mu_; }
  double alpha() const { return alpha_; }
  // Lipschitz constant in z at x (nu, or c * b(x)).
  double z_lipschitz(std::span<const double> x) const {
    if (!depends_on_z_) return 0.0;
    return kind_ == GeneratorKind::bounded_z ? c_ * b(x) : nu_;
  }
  // Weight b(x) of the bounded_z driver; 1 unless configured as loglog.
  double b(std::span<const double> x) const {
    if (!loglog_b_) return 1.0;
    double s = 0.0;
    for (double v : x) s += v;
    return loglog_b(s);
  }
  bool depends_on_z() const { return depends_on_z_; }
  bool lipschitz_in_y() const { return lipschitz_in_y_; }

 private:
  friend GeneratorSpec make_generator(const std::string&, const ParamMap&);
  GeneratorSpec() = default;

  std::string name_;
  GeneratorKind kind_ = GeneratorKind::custom;
  double alpha_ = 0.0;
  double c_ = 0.0;
  double K_tilde_ = 0.0;
  double mu_ = 0.0;
  double nu_ = 0.0;
  bool loglog_b_ = false;
  bool depends_on_z_ = false;
  bool lipschitz_in_y_ = true;
  Fn custom_;
};

// zero, linear_y (alpha), bounded_z (alpha, c, b_loglog = 0|1).
GeneratorSpec make_generator(const std::string& name, const ParamMap& params);

// Numerical sup of g/(1 + sum x) along the diagonal ray, with the asymptote
// extrapolated from the two largest radii (g/(1+r) ~ A + B/(1+r)).
double terminal_slope_K(const std::function<double(const Eigen::VectorXd&)>& g, int dim,
                        const std::vector<double>& radii);

}  // namespace slm
