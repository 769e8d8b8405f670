#include <kgwave/nonlinearity.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace kgwave;

TEST(Model, SineGordonValue) {
  auto sg = AnalyticOddNonlinearity::sine_gordon();
  const long double x = 0.1;
  EXPECT_NEAR(sg.eval(0.1), double(x - std::sin(x)), 1e-19);
  EXPECT_NEAR(sg.eval(0.1), 1.665834e-4, 1e-10);
  for (double u : {0.3, 1.0, 2.5}) EXPECT_NEAR(sg.eval(u), u - std::sin(u), 1e-14);
}

TEST(Model, Oddness) {
  for (auto m : {AnalyticOddNonlinearity::sine_gordon(), AnalyticOddNonlinearity::phi4(),
                 AnalyticOddNonlinearity::custom({0.5, -0.1, 0.01})}) {
    EXPECT_EQ(m.eval(0.0), 0.0);
    for (double u : {0.2, 0.7, 1.3}) EXPECT_EQ(m.eval(-u), -m.eval(u));
  }
}

TEST(Model, Phi4ThirdDerivative) {
  auto m = AnalyticOddNonlinearity::phi4();
  EXPECT_EQ(m.deriv(0.0, 3), 6.0);
  EXPECT_EQ(m.f3(), 6.0);
}

TEST(Model, DerivativesMatchSineGordon) {
  auto sg = AnalyticOddNonlinearity::sine_gordon();
  for (double u : {0.1, 0.9, 2.0}) {
    EXPECT_NEAR(sg.deriv(u, 1), 1.0 - std::cos(u), 1e-14);
    EXPECT_NEAR(sg.deriv(u, 2), std::sin(u), 1e-14);
    EXPECT_NEAR(sg.antiderivative(u), u * u / 2 + std::cos(u) - 1.0, 1e-14);
  }
}

TEST(Model, TrustRadius) {
  auto m = AnalyticOddNonlinearity::custom({1.0}, 2.0);
  EXPECT_THROW(m.eval(2.5), DomainError);
  EXPECT_THROW(AnalyticOddNonlinearity::custom({0.0, 1.0}), DomainError);
}

TEST(Model, ScaledEvaluationContinuousAcrossSwitch) {
  auto sg = AnalyticOddNonlinearity::sine_gordon();
  const double e = AnalyticOddNonlinearity::kEpsSwitch;
  for (double U : {0.5, 1.7})
    EXPECT_NEAR(sg.scaled_eval(U, e * (1 - 1e-12)), sg.scaled_eval(U, e), 1e-9 * std::abs(sg.scaled_eval(U, e)));
}

TEST(TildeF, CubicLimitByRichardson) {
  auto m = AnalyticOddNonlinearity::phi4();
  auto F = [&](double eps) { return tilde_f(1.0, SpatialField(1), RescaledNonlinearity(m, eps)); };
  double h = 4e-3;
  double extrap = (4.0 * F(h / 2) - F(h)) / 3.0;
  EXPECT_NEAR(extrap, -0.75, 1e-10);
  EXPECT_GT(std::abs(F(h) + 0.75), 1e-6);
}

TEST(TildeF, ZeroAtOrigin) {
  RescaledNonlinearity rn(AnalyticOddNonlinearity::sine_gordon(), 0.1);
  EXPECT_EQ(tilde_f(0.0, SpatialField(4), rn), 0.0);
}

TEST(TildeF, Odd) {
  RescaledNonlinearity rn(AnalyticOddNonlinearity::sine_gordon(), 0.2);
  SpatialField w = SpatialField::from_map(4, {{2, 0.3}, {3, -0.1}});
  EXPECT_NEAR(tilde_f(-1.2, -1.0 * w, rn), -tilde_f(1.2, w, rn), 1e-15);
}

TEST(TildeF, MatchesDirectQuadrature) {
  const double eps = 0.3;
  RescaledNonlinearity rn(AnalyticOddNonlinearity::sine_gordon(), eps);
  SpatialField w = SpatialField::from_map(3, {{2, 0.2}, {3, 0.05}});
  auto U = [&](double x) { return 1.1 * std::sin(x) + w.eval(x); };
  double ref = -oracle::sine_coeff([&](double x) { double u = eps * U(x); return (u - std::sin(u)) / (eps * eps * eps); }, 1) /
               (1.0 + eps * eps);
  EXPECT_NEAR(tilde_f(1.1, w, rn), ref, 1e-14);
}

TEST(TildeG, CubicLimit) {
  RescaledNonlinearity rn(AnalyticOddNonlinearity::phi4(), 1e-4);
  SpatialField g = tilde_g(1.0, SpatialField(1), rn, 5);
  EXPECT_NEAR(g(3), 0.25 / rn.omega2(), 1e-15);
  EXPECT_NEAR(g(2), 0.0, 1e-15);
  EXPECT_NEAR(g(5), 0.0, 1e-15);
}

TEST(TildeG, ZeroAtOrigin) {
  RescaledNonlinearity rn(AnalyticOddNonlinearity::sine_gordon(), 0.1);
  EXPECT_EQ(tilde_g(0.0, SpatialField(4), rn).coeffs().cwiseAbs().maxCoeff(), 0.0);
}

TEST(TildeG, OrthogonalToSinX) {
  const double eps = 0.25;
  RescaledNonlinearity rn(AnalyticOddNonlinearity::sine_gordon(), eps);
  SpatialField w = SpatialField::from_map(4, {{2, 0.4}, {4, 0.1}});
  SpatialField g = tilde_g(0.8, w, rn, 12);
  EXPECT_NEAR(oracle::sine_coeff([&](double x) { return g.eval(x); }, 1), 0.0, 1e-15);
  for (int k = 2; k <= 12; ++k) {
    double ref = -oracle::sine_coeff(
                     [&](double x) { double u = eps * (0.8 * std::sin(x) + w.eval(x)); return (u - std::sin(u)) / (eps * eps * eps); }, k) /
                 rn.omega2();
    EXPECT_NEAR(g(k), ref, 1e-14);
  }
}

TEST(TildeG, DerivativeMatchesFiniteDifference) {
  RescaledNonlinearity rn(AnalyticOddNonlinearity::sine_gordon(), 0.3);
  SpatialField w = SpatialField::from_map(5, {{2, 0.3}, {3, -0.2}});
  SpatialField h = SpatialField::from_map(5, {{2, 1.0}, {5, 0.5}});
  const double t = 1e-6;
  SpatialField fd = (1.0 / (2 * t)) * (tilde_g(0.9, w + t * h, rn, 8) - tilde_g(0.9, w - t * h, rn, 8));
  SpatialField an = tilde_g_derivative(0.9, w, h, rn, 8);
  EXPECT_LT((fd - an).coeffs().cwiseAbs().maxCoeff(), 1e-8);
}

TEST(TildeF, TrustViolation) {
  RescaledNonlinearity rn(AnalyticOddNonlinearity::custom({1.0}, 0.5), 0.5);
  EXPECT_THROW(tilde_f(2.0, SpatialField(1), rn), DomainError);
  EXPECT_THROW(RescaledNonlinearity(AnalyticOddNonlinearity::phi4(), 0.0), DomainError);
}
