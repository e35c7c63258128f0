#include <gtest/gtest.h>

#include <cmath>

#include "slmlab/errors.hpp"
#include "slmlab/process_models.hpp"

using namespace slm;

namespace {

DiffusionModel model(const std::string& name, ParamMap p) { return make_builtin_model(name, p); }

}  // namespace

TEST(Models, FactoryRejectsBadInput) {
  EXPECT_THROW(model("nope", {{"x0", {1.0}}}), ConfigError);
  EXPECT_THROW(model("gbm", {}), ConfigError);
  EXPECT_THROW(model("gbm", {{"x0", {0.0}}}), ConfigError);
  EXPECT_THROW(model("gbm", {{"x0", {-1.0}}}), ConfigError);
  EXPECT_THROW(model("gbm", {{"x0", {1.0, 2.0}}}), ConfigError);
  EXPECT_THROW(model("sin2d", {{"x0", {1.0}}, {"rho", {0.5}}}), ConfigError);
  EXPECT_THROW(model("sin2d", {{"x0", {1.0, 1.0}}, {"rho", {1.5}}}), ConfigError);
  EXPECT_THROW(model("cev", {{"x0", {1.0}}, {"beta", {0.0}}}), ConfigError);
}

TEST(Models, OneDimensionalVolatilities) {
  const auto ib = model("inverse_bessel", {{"x0", {1.0}}});
  const auto gbm = model("gbm", {{"x0", {1.0}}});
  const auto cev = model("cev", {{"x0", {1.0}}, {"beta", {1.5}}});
  const auto ll = model("loglog", {{"x0", {1.0}}});
  for (double x : {0.01, 0.5, 1.0, 3.0, 100.0}) {
    EXPECT_DOUBLE_EQ(ib.sigma1(x), -x * x);
    EXPECT_DOUBLE_EQ(gbm.sigma1(x), x);
    EXPECT_NEAR(cev.sigma1(x), std::pow(x, 1.5), 1e-12 * std::pow(x, 1.5));
    const double want = x <= std::exp(1.0) ? x : x * std::sqrt(std::log(x));
    EXPECT_NEAR(ll.sigma1(x), want, 1e-12 * want);
    Eigen::VectorXd v(1);
    v << x;
    EXPECT_DOUBLE_EQ(gbm.sigma(v)(0, 0), gbm.sigma1(x));
  }
}

TEST(Models, LoglogIsContinuousAtE) {
  const double e = std::exp(1.0);
  EXPECT_NEAR(loglog_sigma(e * (1 + 1e-12)), loglog_sigma(e), 1e-9);
  EXPECT_NEAR(loglog_b(e * (1 + 1e-12)), 1.0, 1e-9);
}

TEST(Models, Sin2dVolatilityMatrix) {
  const auto m = model("sin2d", {{"x0", {1.0, 1.0}}, {"rho", {0.5}}});
  ASSERT_EQ(m.dim(), 2);
  Eigen::VectorXd x(2);
  x << 0.7, 2.0;
  const Eigen::MatrixXd s = m.sigma(x);
  ASSERT_EQ(s.rows(), 2);
  ASSERT_EQ(s.cols(), 2);
  // Each row's squared norm is the diffusion coefficient of that coordinate;
  // vanishing on the face x_i = 0 keeps the orthant invariant.
  Eigen::VectorXd face = x;
  face[0] = 0.0;
  EXPECT_NEAR(m.sigma(face).row(0).norm(), 0.0, 1e-12);
  EXPECT_TRUE(s.allFinite());
  EXPECT_THROW(m.sigma1(1.0), ConfigError);
}

TEST(Models, BesselDimensions) {
  EXPECT_EQ(model("inverse_bessel", {{"x0", {1.0}}}).bessel_dimension(), 3);
  EXPECT_EQ(model("cev", {{"x0", {1.0}}, {"beta", {1.5}}}).bessel_dimension(), 4);
  EXPECT_EQ(model("cev", {{"x0", {1.0}}, {"beta", {2.0}}}).bessel_dimension(), 3);
  EXPECT_FALSE(model("cev", {{"x0", {1.0}}, {"beta", {1.7}}}).bessel_dimension());
  EXPECT_FALSE(model("gbm", {{"x0", {1.0}}}).bessel_dimension());
  EXPECT_FALSE(model("loglog", {{"x0", {1.0}}}).bessel_dimension());
}

TEST(Models, BesselRadiusRoundTrip) {
  for (double beta : {1.5, 2.0}) {
    const auto m = model("cev", {{"x0", {1.0}}, {"beta", {beta}}});
    for (double x : {0.1, 1.0, 7.0})
      EXPECT_NEAR(m.from_bessel_radius(m.to_bessel_radius(x)), x, 1e-12 * x);
  }
  const auto ib = model("inverse_bessel", {{"x0", {1.0}}});
  EXPECT_DOUBLE_EQ(ib.to_bessel_radius(4.0), 0.25);
}

TEST(Models, CustomModelValidation) {
  const auto ok = DiffusionModel::custom_1d("half", 1.0, [](double x) { return 0.5 * x; }, true);
  EXPECT_DOUBLE_EQ(ok.sigma1(2.0), 1.0);
  EXPECT_THROW(DiffusionModel::custom_1d("bad", 1.0, [](double) { return NAN; }, true), ConfigError);
  EXPECT_THROW(DiffusionModel::custom_1d("nofn", 1.0, nullptr, true), ConfigError);
  EXPECT_THROW(DiffusionModel::custom("wrongshape", Eigen::VectorXd::Ones(2),
                                      [](const Eigen::VectorXd&) { return Eigen::MatrixXd(1, 1); },
                                      true),
               ConfigError);
}

TEST(Models, WithX0KeepsParameters) {
  const auto m = model("cev", {{"x0", {1.0}}, {"beta", {1.5}}});
  Eigen::VectorXd x(1);
  x << 3.0;
  const auto n = m.with_x0(x);
  EXPECT_DOUBLE_EQ(n.x0_sum(), 3.0);
  EXPECT_DOUBLE_EQ(n.beta(), 1.5);
  EXPECT_THROW(m.with_x0(Eigen::VectorXd::Ones(2)), ConfigError);
}

TEST(Terminals, BuiltinsAndConstants) {
  const auto id = make_terminal("identity", {});
  const auto call = make_terminal("call", {{"strike", {2.0}}});
  const auto cap = make_terminal("bounded", {{"cap", {3.0}}});
  Eigen::VectorXd x(2);
  x << 1.5, 2.0;
  EXPECT_DOUBLE_EQ(id.g(x), 3.5);
  EXPECT_DOUBLE_EQ(call.g(x), 1.5);
  EXPECT_DOUBLE_EQ(cap.g(x), 3.0);
  EXPECT_DOUBLE_EQ(id.slope_K(), 1.0);
  EXPECT_TRUE(id.satisfies_h4());
  // gbar = K(1 + sum x) - g stays nonnegative.
  for (const auto* t : {&id, &call, &cap}) EXPECT_GE(t->gbar(x), 0.0);
  EXPECT_THROW(make_terminal("bogus", {}), ConfigError);
  EXPECT_THROW(make_terminal("call", {{"strike", {-1.0}}}), ConfigError);
  EXPECT_THROW(make_terminal("identity", {{"cutoff_width", {0.0}}}), ConfigError);
}

TEST(Terminals, RadialRamp) {
  const auto id = make_terminal("identity", {{"cutoff_width", {0.5}}});
  auto h = [&](double r) {
    Eigen::VectorXd x(1);
    x << r;
    return id.h(std::span<const double>(x.data(), 1), 4.0);
  };
  EXPECT_DOUBLE_EQ(h(1.0), 1.0);
  EXPECT_DOUBLE_EQ(h(3.5), 1.0);
  EXPECT_DOUBLE_EQ(h(3.75), 0.5);
  EXPECT_DOUBLE_EQ(h(4.0), 0.0);
  EXPECT_DOUBLE_EQ(h(9.0), 0.0);
  Eigen::VectorXd v(2);
  v << 3.0, 4.0;  // |v| = 5
  EXPECT_DOUBLE_EQ(id.h(std::span<const double>(v.data(), 2), 5.0), 0.0);
}

TEST(Terminals, NumericalSlopeK) {
  const std::vector<double> radii{1, 10, 100, 1000, 10000};
  EXPECT_NEAR(terminal_slope_K([](const Eigen::VectorXd& x) { return x.sum(); }, 1, radii), 1.0, 1e-6);
  EXPECT_NEAR(terminal_slope_K([](const Eigen::VectorXd& x) { return 2.0 * x.sum() + 1.0; }, 2, radii),
              2.0, 1e-6);
  EXPECT_THROW(terminal_slope_K([](const Eigen::VectorXd& x) { return x.sum(); }, 1, {}), ConfigError);
}

TEST(Generators, BuiltinsAndConstants) {
  const auto z = make_generator("zero", {});
  const auto lin = make_generator("linear_y", {{"alpha", {0.3}}});
  const auto bz = make_generator("bounded_z", {{"alpha", {0.1}}, {"c", {2.0}}});
  const double x[1] = {1.0};
  const double zz[1] = {10.0};
  const std::span<const double> xs(x, 1), zs(zz, 1);
  EXPECT_DOUBLE_EQ(z.f(0, xs, 5.0, zs), 0.0);
  EXPECT_DOUBLE_EQ(lin.f(0, xs, 2.0, zs), 0.6);
  EXPECT_DOUBLE_EQ(bz.f(0, xs, 1.0, zs), 0.1 + 2.0);  // c min(b|z|, 1)
  EXPECT_FALSE(lin.depends_on_z());
  EXPECT_TRUE(bz.depends_on_z());
  EXPECT_DOUBLE_EQ(lin.mu(), 0.3);
  EXPECT_DOUBLE_EQ(bz.H(0, 1.0), 4.0);
  EXPECT_THROW(make_generator("linear_y", {{"alpha", {-1.0}}}), ConfigError);
  EXPECT_THROW(make_generator("quadratic", {}), ConfigError);
}

TEST(Generators, LoglogWeight) {
  const auto bz = make_generator("bounded_z", {{"c", {1.0}}, {"b_loglog", {1.0}}});
  const double small[1] = {1.0}, big[1] = {100.0};
  EXPECT_DOUBLE_EQ(bz.b(std::span<const double>(small, 1)), 1.0);
  EXPECT_NEAR(bz.b(std::span<const double>(big, 1)), loglog_b(100.0), 1e-15);
  EXPECT_LT(bz.b(std::span<const double>(big, 1)), 0.02);
}
