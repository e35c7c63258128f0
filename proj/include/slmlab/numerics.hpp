#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>

#include "slmlab/errors.hpp"

namespace slm {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

template <typename Scalar>
Scalar normal_cdf(Scalar x) {
  using std::erfc;
  using std::sqrt;
  return Scalar(0.5) * erfc(-x / sqrt(Scalar(2)));
}

// Sample mean and standard error (sample std / sqrt(n)).
template <typename Derived>
Estimate mean_and_se(const Eigen::DenseBase<Derived>& v) {
  const auto n = v.size();
  if (n == 0) throw NumericalError("mean of an empty sample");
  const double mean = v.derived().template cast<double>().mean();
  if (n == 1) return {mean, 0.0};
  const double ss = (v.derived().template cast<double>().array() - mean).square().sum();
  return {mean, std::sqrt(ss / double(n - 1) / double(n))};
}

// E[1/|W_t + r e|] for a 3-d Brownian motion W. Expected value of the
// reciprocal Bessel process started at 1/r.
template <typename Scalar>
Scalar inverse_bessel_mean(Scalar x0, Scalar t) {
  using std::sqrt;
  if (t <= Scalar(0)) return x0;
  return x0 * (Scalar(2) * normal_cdf(Scalar(1) / (x0 * sqrt(t))) - Scalar(1));
}

// Adaptive Gauss-Kronrod (7/15) on [a, b]. Returns the integral; throws if
// the integrand is not finite at a node.
template <typename F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-12, double abs_tol = 1e-300,
                 int max_depth = 50) {
  static constexpr std::array<double, 8> xk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  auto eval = [&](double x) {
    const double y = f(x);
    if (!std::isfinite(y)) throw NumericalError("integrand not finite at x = " + std::to_string(x));
    return y;
  };
  auto rule = [&](double lo, double hi, double& err) {
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    const double fc = eval(c);
    double k = wk[7] * fc, g = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
      const double s = eval(c - h * xk[j]) + eval(c + h * xk[j]);
      k += wk[j] * s;
      if (j % 2 == 1) g += wg[j / 2] * s;
    }
    err = std::abs((k - g) * h);
    return k * h;
  };
  std::function<double(double, double, double, int)> rec = [&](double lo, double hi, double whole,
                                                                 int depth) -> double {
    const double mid = 0.5 * (lo + hi);
    double e1 = 0, e2 = 0;
    const double left = rule(lo, mid, e1), right = rule(mid, hi, e2);
    const double sum = left + right;
    if (depth >= max_depth || e1 + e2 <= std::max(abs_tol, rel_tol * std::abs(sum)) ||
        std::abs(sum - whole) <= 1e-15 * std::abs(sum))
      return sum;
    return rec(lo, mid, left, depth + 1) + rec(mid, hi, right, depth + 1);
  };
  double err = 0;
  const double whole = rule(a, b, err);
  if (err <= std::max(abs_tol, rel_tol * std::abs(whole))) return whole;
  return rec(a, b, whole, 1);
}

// Solves a tridiagonal system in place (Thomas algorithm). lower[0] and
// upper[n-1] are ignored. Stable for the diagonally dominant M-matrices the
// PDE scheme produces; throws on a vanishing pivot.
template <typename Scalar>
void solve_tridiagonal(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lower,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diag,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& upper,
                       Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs) {
  const Eigen::Index n = diag.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c(n);
  Scalar beta = diag[0];
  if (beta == Scalar(0)) throw NumericalError("tridiagonal solve: zero pivot at row 0");
  rhs[0] /= beta;
  for (Eigen::Index i = 1; i < n; ++i) {
    c[i - 1] = upper[i - 1] / beta;
    beta = diag[i] - lower[i] * c[i - 1];
    if (beta == Scalar(0) || !std::isfinite(double(beta)))
      throw NumericalError("tridiagonal solve: zero pivot at row " + std::to_string(i));
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) rhs[i] -= c[i] * rhs[i + 1];
}

}  // namespace slm
