#include <kgwave/divisors.hpp>
#include <kgwave/planar_limit.hpp>

#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"

using namespace kgwave;

namespace {

constexpr double kFrozenDivisorLawC = 1.5;

Trajectory zero_trajectory(double p) { return Trajectory(p, Eigen::VectorXd::Zero(1)); }

}  // namespace

TEST(Potential, VanishesAtOrigin) {
  SampledPeriodic q = averaged_potential(zero_trajectory(kTwoPi), nullptr, 0.1, AnalyticOddNonlinearity::phi4());
  EXPECT_EQ(q.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Potential, CubicIsProportionalToVSquared) {
  const double eps = 0.1;
  PlanarOrbit o = find_orbit(6.0, 1.0);
  Trajectory V = o.trajectory();
  SampledPeriodic q = averaged_potential(V, nullptr, eps, AnalyticOddNonlinearity::phi4());
  const int n = int(q.values.size());
  for (int i = 0; i < n; i += 7) {
    double v = oracle::cos_series(V.coeffs(), o.period, o.period * i / n);
    // x-mean of -3 v^2 sin^2 x / omega^2
    EXPECT_NEAR(q.values[i], -1.5 * v * v / (1.0 + eps * eps), 1e-14);
  }
}

TEST(Potential, EvenAndPeriodic) {
  auto sg = AnalyticOddNonlinearity::sine_gordon();
  Trajectory V = find_orbit(1.0, 1.0).trajectory();
  SampledPeriodic q = averaged_potential(V, nullptr, 0.2, sg, 256);
  for (int i = 1; i < 256; ++i) EXPECT_NEAR(q.values[i], q.values[256 - i], 1e-14);
}

TEST(Hill, FlatPotential) {
  SampledPeriodic q{kTwoPi, Eigen::VectorXd::Zero(64)};
  HillSpectrum h = hill_eigs(q, 20, true);
  for (int j = 0; j <= 20; ++j) EXPECT_NEAR(h.lambda(j), double(j) * j, 1e-12);
  EXPECT_LT((h.eigenvectors - Eigen::MatrixXd::Identity(21, 21)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Hill, ConstantShift) {
  const double p = 3.0, c = -0.7;
  SampledPeriodic q{p, Eigen::VectorXd::Constant(64, c)};
  HillSpectrum h = hill_eigs(q, 30);
  for (int j = 0; j <= 30; ++j) EXPECT_NEAR(h.lambda(j), std::pow(kTwoPi * j / p, 2) + c, 1e-10);
}

TEST(Hill, GrowthLaw) {
  auto sg = AnalyticOddNonlinearity::sine_gordon();
  PlanarOrbit o = find_orbit(1.0, 1.0);
  SampledPeriodic q = averaged_potential(o.trajectory(), nullptr, 0.3, sg);
  HillSpectrum a = hill_eigs(q, 60), b = hill_eigs(q, 120);
  const double w2 = std::pow(kTwoPi / o.period, 2);
  for (int j = 20; j <= 60; ++j) {
    EXPECT_NEAR(a.lambda(j) / (double(j) * j), w2, 0.01 * w2);
    if (j <= 40) EXPECT_NEAR(a.lambda(j), b.lambda(j), 1e-8 * a.lambda(j));
  }
}

TEST(Hill, MatchesFiniteDifferenceEigenvalues) {
  // Mathieu-type q = 2 cos(2 pi tau / p), even eigenfunctions, second-order periodic finite differences
  const double p = 4.0;
  const int n = 2000;
  SampledPeriodic q{p, Eigen::VectorXd(256)};
  for (int i = 0; i < 256; ++i) q.values[i] = 2.0 * std::cos(kTwoPi * i / 256);
  HillSpectrum h = hill_eigs(q, 40);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  const double dx = p / n;
  for (int i = 0; i < n; ++i) {
    A(i, i) = 2.0 / (dx * dx) + 2.0 * std::cos(kTwoPi * i / n);
    A(i, (i + 1) % n) = A(i, (i + n - 1) % n) = -1.0 / (dx * dx);
  }
  Eigen::VectorXd all = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues();
  // every Hill eigenvalue appears in the full periodic spectrum
  for (int j = 0; j <= 6; ++j) {
    double best = INFINITY;
    for (int i = 0; i < all.size(); ++i) best = std::min(best, std::abs(all[i] - h.lambda(j)));
    EXPECT_LT(best, 2e-4 * (1.0 + std::abs(h.lambda(j))));
  }
}

TEST(Roots, SpotValueMatchesBisection) {
  HillSpectrum s = flat_spectrum(kTwoPi, 0.0, 200);
  double e = *epsilon_kj(2, 100, s);
  EXPECT_NEAR(e, oracle::divisor_root_bisect(2, 1e4), 1e-12);
  EXPECT_NEAR(e, 1.7321374e-2, 1e-8);
  EXPECT_LE(std::abs(small_divisor(2, e, 1e4)), 1e-12);
}

TEST(Roots, Asymptotics) {
  const double p = 5.0;
  HillSpectrum s = flat_spectrum(p, 0.0, 10000);
  for (int k = 2; k <= 4; ++k) {
    double lim = p / kTwoPi * std::sqrt(double(k) * k - 1.0), prev = INFINITY;
    for (int j : {100, 1000, 10000}) {
      double err = std::abs(j * *epsilon_kj(k, j, s) / lim - 1.0);
      EXPECT_LT(err, prev);
      prev = err;
    }
    EXPECT_LT(prev, 0.01);
  }
}

TEST(Roots, DecreasingInJ) {
  DivisorTable t(flat_spectrum(3.0, 0.0, 400), 4);
  for (int k = 2; k <= 4; ++k)
    for (int j = 2; j <= 400; ++j) EXPECT_LT(*t(k, j), *t(k, j - 1));
  EXPECT_FALSE(t(2, 0).has_value());
  EXPECT_LE(t.max_residual(), 1e-12);
}

TEST(Roots, NoRootForNonpositiveLambda) {
  EXPECT_FALSE(epsilon_root(2, 0.0).has_value());
  EXPECT_FALSE(epsilon_root(2, -3.0).has_value());
  EXPECT_THROW(epsilon_root(1, 4.0), DomainError);
}

TEST(Windows, CenterIsResonantMidpointIsNot) {
  ResonanceParams rp;
  DivisorTable t(flat_spectrum(kTwoPi, 0.0, 2000), 2);
  double c = *t(2, 100);
  ResonanceReport r = is_resonant(c, rp, t, 2, 2);
  EXPECT_TRUE(r.resonant);
  EXPECT_EQ(r.k, 2);
  EXPECT_EQ(r.j, 100);
  double mid = 0.5 * (*t(2, 10) + *t(2, 11));
  EXPECT_FALSE(is_resonant(mid, rp, t, 2, 2).resonant);
}

TEST(Windows, CoverageErrorWhenTableShort) {
  ResonanceParams rp;
  DivisorTable t(flat_spectrum(kTwoPi, 0.0, 50), 3);
  EXPECT_THROW(is_resonant(0.01, rp, t, 2, 3), CoverageError);
  EXPECT_THROW(is_resonant(0.3, rp, t, 2, 5), CoverageError);
}

TEST(Windows, MeasureScalesLikeEpsPowerLMinusOne) {
  ResonanceParams rp;
  DivisorTable t(flat_spectrum(kTwoPi, 0.0, 2000), 5);
  double a = window_length_sum(t, rp, 0.1, 2, 5), b = window_length_sum(t, rp, 0.05, 2, 5);
  double expected = std::pow(2.0, rp.l - 1.0);
  EXPECT_GT(a / b, 0.8 * expected);
  EXPECT_LT(a / b, 1.25 * expected);
  EXPECT_LE(window_union_measure(t, rp, 0.05, 2, 5, false), b);
}

TEST(DivisorMin, BetweenWindows) {
  HillSpectrum s = flat_spectrum(kTwoPi, 0.0, 2000);
  const double eps = 0.015;
  DivisorMin m = divisor_min(eps, 2, s);
  double best = INFINITY, second = INFINITY;
  int arg = -1;
  for (int j = 1; j <= int(2 * 2 / eps); ++j) {
    double d = std::abs(-4.0 + 1.0 / (1.0 + eps * eps) + eps * eps * double(j) * j);
    if (d < best) second = best, best = d, arg = j;
    else second = std::min(second, d);
  }
  EXPECT_GT(m.m, 0.0);
  EXPECT_NEAR(m.m, best, 1e-13);
  EXPECT_EQ(m.j_min, arg);
  EXPECT_GT(second - best, 1e-3);
}

TEST(DivisorMin, ZeroAtRoot) {
  HillSpectrum s = flat_spectrum(kTwoPi, 0.0, 2000);
  double e = *epsilon_kj(3, 150, s);
  DivisorMin m = divisor_min(e, 3, s);
  EXPECT_LT(m.m, 1e-11);
  EXPECT_EQ(m.j_min, 150);
}

TEST(DivisorMin, LowerBoundLawOnNonResonantSamples) {
  ResonanceParams rp;
  HillSpectrum s = flat_spectrum(kTwoPi, 0.0, 2000);
  DivisorTable t(s, 5);
  int count = 0;
  double worst = INFINITY;
  for (int i = 1; i < 1000 && count < 100; ++i) {
    double u = i * 0.6180339887498949;
    double eps = 0.02 + 0.18 * (u - std::floor(u));
    if (is_resonant(eps, rp, t, 2, 5).resonant) continue;
    ++count;
    for (int k = 2; k <= 5; ++k)
      worst = std::min(worst, divisor_min(eps, k, s).m * std::pow(k, rp.gamma()) / std::pow(eps, rp.l - 1.0));
  }
  EXPECT_EQ(count, 100);
  EXPECT_GE(worst, kFrozenDivisorLawC);
}

TEST(Table, CsvLayout) {
  ResonanceParams rp;
  DivisorTable t(flat_spectrum(kTwoPi, 0.0, 10), 3);
  std::ostringstream os;
  t.write_csv(os, rp, 3);
  std::string s = os.str();
  EXPECT_EQ(s.rfind("k,j,eps_kj,window_lo,window_hi\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 11);
}

TEST(Params, Validation) {
  ResonanceParams rp;
  EXPECT_NO_THROW(rp.validate());
  rp.l = 3.2;
  EXPECT_THROW(rp.validate(), DomainError);
  rp = {};
  rp.alpha = 0.6;
  EXPECT_THROW(rp.validate(), DomainError);
}
