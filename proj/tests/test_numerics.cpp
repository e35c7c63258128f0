#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "slmlab/errors.hpp"
#include "slmlab/numerics.hpp"

using namespace slm;

TEST(Integrate, Polynomials) {
  EXPECT_NEAR(integrate([](double x) { return x * x; }, 0.0, 1.0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(integrate([](double x) { return std::exp(x); }, 0.0, 2.0), std::exp(2.0) - 1.0, 1e-12);
}

TEST(Integrate, PowerTailPiece) {
  // int_1^R r^-3 dr = (1 - R^-2)/2
  const double R = 1e4;
  EXPECT_NEAR(integrate([](double r) { return 1.0 / (r * r * r); }, 1.0, R), 0.5 * (1 - 1 / (R * R)),
              1e-12);
}

TEST(Integrate, RejectsNonFiniteIntegrand) {
  EXPECT_THROW(integrate([](double x) { return 1.0 / (x - 0.5) / 0.0; }, 0.0, 1.0), NumericalError);
}

TEST(NormalCdf, KnownValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-14);
  EXPECT_NEAR(normal_cdf(-1.96), 0.024997895148220435, 1e-14);
}

TEST(InverseBesselMean, ClosedFormAtUnitStart) {
  EXPECT_NEAR(inverse_bessel_mean(1.0, 1.0), 0.6826894921370859, 1e-13);
  EXPECT_EQ(inverse_bessel_mean(2.0, 0.0), 2.0);
}

// Independent oracle: X_T = 1/|x0^-1 e1 + W_T| for a 3-d Brownian motion W.
TEST(InverseBesselMean, AgreesWithRawGaussianMonteCarlo) {
  std::mt19937_64 gen(20240611);
  std::normal_distribution<double> n01;
  for (double x0 : {0.5, 1.0, 2.0}) {
    const int n = 400000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double a = 1.0 / x0 + n01(gen), b = n01(gen), c = n01(gen);
      const double x = 1.0 / std::sqrt(a * a + b * b + c * c);
      s += x;
      s2 += x * x;
    }
    const double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
    EXPECT_NEAR(m, inverse_bessel_mean(x0, 1.0), 4 * se) << "x0 = " << x0;
  }
}

TEST(MeanAndSe, MatchesTextbookFormula) {
  Eigen::VectorXd v(4);
  v << 1, 2, 3, 4;
  const Estimate e = mean_and_se(v);
  EXPECT_DOUBLE_EQ(e.value, 2.5);
  EXPECT_NEAR(e.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Tridiagonal, MatchesDenseSolve) {
  const int n = 50;
  Eigen::VectorXd lo(n), di(n), up(n), rhs(n);
  std::mt19937 g(1);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    lo[i] = -u(g);
    up[i] = -u(g);
    di[i] = 2.5 + u(g);
    rhs[i] = u(g);
    A(i, i) = di[i];
    if (i > 0) A(i, i - 1) = lo[i];
    if (i + 1 < n) A(i, i + 1) = up[i];
  }
  Eigen::VectorXd x = rhs;
  solve_tridiagonal(lo, di, up, x);
  EXPECT_LT((A * x - rhs).norm(), 1e-12);
}
