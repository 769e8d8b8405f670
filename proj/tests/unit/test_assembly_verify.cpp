#include <kgwave/assembly_verify.hpp>

#include <gtest/gtest.h>

using namespace kgwave;

namespace {

const PlanarOrbit& unit_orbit() {
  static const PlanarOrbit o = find_orbit(1.0, 1.0);
  return o;
}

const ClosureResult& closure_at_point_one() {
  static const ClosureResult r =
      solve_delta1(unit_orbit(), 0.1, AnalyticOddNonlinearity::sine_gordon(), SolverConfig{});
  return r;
}

}  // namespace

TEST(Assemble, LeadingProfileWithoutCorrection) {
  const auto& o = unit_orbit();
  const double eps = 0.2, om = std::sqrt(1.0 + eps * eps);
  Trajectory V = o.trajectory();
  AssembledSolution u(eps, V, SpaceTimeField(o.period, 1, 0));
  for (double x : {0.0, 1.3, 7.9})
    for (double t : {0.2, 2.5}) EXPECT_NEAR(u(x, t), eps * V.value(eps * om * x) * std::sin(om * t), 1e-15);
  Eigen::MatrixXd G = u.grid(8, 8);
  EXPECT_NEAR(G(3, 5), u(u.x_period() * 3 / 8, u.t_period() * 5 / 8), 1e-15);
}

TEST(Assemble, ZeroSolutionHasZeroResidual) {
  AssembledSolution u(0.1, Trajectory(kTwoPi, Eigen::VectorXd::Zero(2)), SpaceTimeField(kTwoPi, 3, 2));
  EXPECT_EQ(pde_residual(u, AnalyticOddNonlinearity::sine_gordon(), 16, 16), 0.0);
}

TEST(Assemble, GridDerivativesMatchPointwise) {
  const ClosureResult& c = closure_at_point_one();
  AssembledSolution u = assemble_u(c);
  for (auto [dx, dt] : {std::pair{2, 0}, std::pair{0, 2}, std::pair{1, 1}}) {
    Eigen::MatrixXd G = u.grid(6, 6, dx, dt);
    EXPECT_NEAR(G(2, 4), u(u.x_period() * 2 / 6, u.t_period() * 4 / 6, dx, dt), 1e-13);
  }
}

TEST(Assemble, ClosedSolutionAtPointOne) {
  AssembledSolution u = assemble_u(closure_at_point_one());
  EXPECT_LE(pde_residual(u, AnalyticOddNonlinearity::sine_gordon()), 1e-8);
  SymmetryReport s = symmetry_defects(u);
  EXPECT_LE(s.even_x, 1e-12);
  EXPECT_LE(s.odd_t, 1e-12);
  EXPECT_LE(s.period_x, 1e-12);
  EXPECT_LE(s.period_t, 1e-12);
}

TEST(Assemble, ResidualGrowsLinearlyUnderPerturbation) {
  const ClosureResult& c = closure_at_point_one();
  auto sg = AnalyticOddNonlinearity::sine_gordon();
  std::vector<double> r;
  for (double d : {1e-6, 1e-5, 1e-4}) {
    SpaceTimeField w = c.w;
    w(1, 2) += d;
    r.push_back(pde_residual(AssembledSolution(c.eps, c.V, w), sg));
  }
  EXPECT_NEAR(r[1] / r[0], 10.0, 1.0);
  EXPECT_NEAR(r[2] / r[1], 10.0, 1.0);
}

TEST(Assemble, OpenClosureRejected) {
  ClosureResult c = closure_at_point_one();
  c.closed = false;
  EXPECT_THROW(assemble_u(c), AssemblyError);
}

TEST(Tail, ZeroForLeadingProfile) {
  Trajectory V = unit_orbit().trajectory();
  AssembledSolution u(0.15, V, SpaceTimeField(V.period(), 1, 0));
  EXPECT_LT(tail_norm(u, V), 1e-14);
}

TEST(Tail, EqualsSupOfSingleHarmonic) {
  Trajectory V = unit_orbit().trajectory();
  SpaceTimeField w(V.period(), 3, 0);
  w(0, 3) = 2.5e-3;
  AssembledSolution u(0.15, V, w);
  EXPECT_NEAR(tail_norm(u, V), 2.5e-3, 1e-15);
}

TEST(Sweep, EmptyList) {
  SweepReport r = epsilon_sweep(AnalyticOddNonlinearity::sine_gordon(), 1.0, {}, SweepConfig{});
  EXPECT_EQ(r.status, "empty");
  EXPECT_TRUE(r.rows.empty());
}

TEST(Sweep, ResonantOnlyListHasNoData) {
  SweepReport r = epsilon_sweep(AnalyticOddNonlinearity::sine_gordon(), 1.0, {0.1}, SweepConfig{});
  EXPECT_EQ(r.status, "no data");
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(r.rows[0].resonant_skip);
  EXPECT_FALSE(r.tail.fit.has_value());
}

TEST(Sweep, SinglePointIsInsufficient) {
  SweepConfig sc;
  sc.deriv_step = 0.0;
  SweepReport r = epsilon_sweep(AnalyticOddNonlinearity::sine_gordon(), 1.0, {0.175}, sc);
  EXPECT_EQ(r.status, "insufficient data");
  EXPECT_EQ(r.converged_rows, 1);
  EXPECT_FALSE(r.norm_w1.fit.has_value());
  EXPECT_LE(r.rows[0].residual, 1e-8);
  EXPECT_NEAR(r.amplitude_spread, 1.0, 0.0);
}

TEST(Sweep, RejectsOutOfRangeEps) {
  EXPECT_THROW(epsilon_sweep(AnalyticOddNonlinearity::sine_gordon(), 1.0, {0.1, 1.5}, SweepConfig{}), DomainError);
}
