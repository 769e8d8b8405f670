#include <kgwave/galerkin_solver.hpp>
#include <kgwave/planar_limit.hpp>

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace kgwave;

namespace {

const PlanarOrbit& unit_orbit() {
  static const PlanarOrbit o = find_orbit(1.0, 1.0);
  return o;
}

double sg_over_eps3(double eps, double U) {
  double u = eps * U;
  return (u - std::sin(u)) / (eps * eps * eps);
}

SpaceTimeField random_small(std::mt19937_64& rng, double p, int nx, int nt, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  SpaceTimeField y(p, nx, nt);
  for (int k = 2; k <= nx; ++k)
    for (int j = 0; j <= nt; ++j) y(j, k) = g(rng) / (k * k * (1.0 + j));
  return y;
}

Eigen::MatrixXd columns(const LinearizedOperator& L) {
  Eigen::MatrixXd M(L.size(), L.size());
  for (int c = 0; c < L.size(); ++c) M.col(c) = L.apply(Eigen::VectorXd::Unit(L.size(), c));
  return M;
}

}  // namespace

TEST(AssembleF, ZeroTrajectoryZeroField) {
  Trajectory V(kTwoPi, Eigen::VectorXd::Zero(2));
  SpaceTimeField y(kTwoPi, 5, 6);
  EXPECT_EQ(assemble_F(V, y, 0.2, AnalyticOddNonlinearity::sine_gordon()).coeffs().cwiseAbs().maxCoeff(), 0.0);
}

TEST(AssembleF, SuppressedModelIsDiagonal) {
  Trajectory V = unit_orbit().trajectory();
  std::mt19937_64 rng(2);
  SpaceTimeField y = random_small(rng, V.period(), 6, 8, 0.1);
  const double eps = 0.2;
  SpaceTimeField F = assemble_F(V, y, eps, AnalyticOddNonlinearity::suppressed());
  for (int k = 2; k <= 6; ++k)
    for (int j = 0; j <= 8; ++j) EXPECT_NEAR(F(j, k), diag_symbol(j, k, eps, V.period()) * y(j, k), 1e-14);
}

TEST(AssembleF, LinearizationBySecondOrderDifferences) {
  Trajectory V = unit_orbit().trajectory();
  const double eps = 0.3;
  auto sg = AnalyticOddNonlinearity::sine_gordon();
  std::mt19937_64 rng(8);
  SpaceTimeField y = random_small(rng, V.period(), 4, 10, 0.5), d = random_small(rng, V.period(), 4, 10, 1.0);
  Eigen::VectorXd Ld = assemble_L(V, y, eps, sg, 4).apply(detail::flat(d));
  auto err = [&](double h) {
    SpaceTimeField fd = (1.0 / (2 * h)) * (assemble_F(V, y + h * d, eps, sg) - assemble_F(V, y - h * d, eps, sg));
    return (detail::flat(fd) - Ld).cwiseAbs().maxCoeff();
  };
  double e1 = err(2e-2), e2 = err(1e-2);
  EXPECT_LT(e2, 1e-6);
  EXPECT_NEAR(e1 / e2, 4.0, 0.5);
}

TEST(AssembleL, DecoupledAtZeroTrajectory) {
  Trajectory V(kTwoPi, Eigen::VectorXd::Zero(2));
  const double eps = 0.2;
  LinearizedOperator L = assemble_L(V, SpaceTimeField(kTwoPi, 5, 7), eps, AnalyticOddNonlinearity::phi4(), 5);
  Eigen::MatrixXd M = columns(L);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(L.size(), L.size());
  for (int i = 0; i < L.size(); ++i) {
    auto [j, k] = L.mode_of(i);
    D(i, i) = diag_symbol(j, k, eps, kTwoPi);
  }
  EXPECT_LT((M - D).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AssembleL, SymmetricInOrthonormalBasis) {
  Trajectory V = unit_orbit().trajectory();
  std::mt19937_64 rng(12);
  SpaceTimeField y = random_small(rng, V.period(), 5, 9, 0.3);
  LinearizedOperator L = assemble_L(V, y, 0.25, AnalyticOddNonlinearity::sine_gordon(), 5);
  Eigen::VectorXd s = orthonormal_scale(5, 9);
  Eigen::MatrixXd Lh = s.asDiagonal() * columns(L) * s.cwiseInverse().asDiagonal();
  double scale = Lh.cwiseAbs().maxCoeff();
  EXPECT_LT((Lh - Lh.transpose()).cwiseAbs().maxCoeff(), 1e-10 * scale);
  EXPECT_LT((Lh - L.dense_symmetric()).cwiseAbs().maxCoeff(), 1e-10 * scale);
}

TEST(AssembleL, XIndependentMultiplierHasNoCrossBlocks) {
  Trajectory V = unit_orbit().trajectory();
  StageProblem sp(V, 0.2, AnalyticOddNonlinearity::sine_gordon(), 5, 6);
  const auto& g = sp.grid();
  Eigen::MatrixXd m(g.mt(), g.mx());
  for (int i = 0; i < g.mt(); ++i) m.row(i).setConstant(0.3 + std::cos(kTwoPi * i / g.mt()));
  LinearizedOperator L(sp.grid_ptr(), m, 5, 6, 0.2);
  Eigen::MatrixXd M = columns(L);
  const int nj = 7;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (a != b) EXPECT_LT(M.block(a * nj, b * nj, nj, nj).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_GT(M.block(0, 0, nj, nj).cwiseAbs().maxCoeff(), 0.1);
}

TEST(InvertL, DiagonalCase) {
  Trajectory V(kTwoPi, Eigen::VectorXd::Zero(2));
  const double eps = 0.13;
  LinearizedOperator L = assemble_L(V, SpaceTimeField(kTwoPi, 4, 5), eps, AnalyticOddNonlinearity::suppressed(), 4);
  Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(L.size(), 1.0, 2.0);
  LinearSolution sol = invert_L_N(L, rhs, eps, InverseParams{});
  for (int i = 0; i < L.size(); ++i) {
    auto [j, k] = L.mode_of(i);
    EXPECT_NEAR(sol.x[i], rhs[i] / diag_symbol(j, k, eps, kTwoPi), 1e-13);
  }
  EXPECT_EQ(sol.report.method, "dense");
}

TEST(InvertL, IterativePathAgreesWithDense) {
  Trajectory V = unit_orbit().trajectory();
  std::mt19937_64 rng(21);
  SpaceTimeField y = random_small(rng, V.period(), 6, 20, 0.2);
  LinearizedOperator L = assemble_L(V, y, 0.17, AnalyticOddNonlinearity::sine_gordon(), 6);
  Eigen::VectorXd rhs = Eigen::VectorXd::Random(L.size());
  InverseParams dense, iter;
  iter.dense_limit = 0;
  Eigen::VectorXd a = invert_L_N(L, rhs, 0.17, dense).x, b = invert_L_N(L, rhs, 0.17, iter).x;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8 * a.cwiseAbs().maxCoeff());
  EXPECT_LT((L.apply(a) - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(InvertL, ExactResonanceIsReported) {
  Trajectory V(kTwoPi, Eigen::VectorXd::Zero(2));
  const double eps = *epsilon_kj(2, 10, flat_spectrum(kTwoPi, 0.0, 20));
  for (int limit : {1000, 0}) {
    LinearizedOperator L =
        assemble_L(V, SpaceTimeField(kTwoPi, 2, 12), eps, AnalyticOddNonlinearity::suppressed(), 2);
    InverseParams prm;
    prm.dense_limit = limit;
    try {
      invert_L_N(L, Eigen::VectorXd::Ones(L.size()), eps, prm);
      FAIL() << "expected NearSingularError";
    } catch (const NearSingularError& e) {
      EXPECT_EQ(e.k, 2);
      EXPECT_EQ(e.j, 10);
    }
  }
}

TEST(Solver, SuppressedModelGivesZero) {
  SolverConfig cfg;
  cfg.N_cap = 8;
  cfg.tau_cap = 8;
  SolverRun run = nash_moser_solve(unit_orbit().trajectory(), 0.2, cfg, AnalyticOddNonlinearity::suppressed());
  EXPECT_TRUE(run.converged);
  EXPECT_EQ(run.w.coeffs().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solver, MiniatureMatchesIndependentNewton) {
  const auto& o = unit_orbit();
  const double eps = 0.15;
  SolverConfig cfg;
  cfg.N_cap = 4;
  cfg.tau_cap = 5;
  cfg.nf_steps = 0;
  cfg.residual_tol = 1e-14;
  SolverRun run = nash_moser_solve(o.trajectory(), eps, cfg, AnalyticOddNonlinearity::sine_gordon());
  oracle::MiniatureProblem mp{o.trajectory().coeffs(), o.period, eps, 4, 5,
                              [eps](double U) { return sg_over_eps3(eps, U); }};
  Eigen::VectorXd a = mp.newton();
  ASSERT_EQ(run.y.nx(), 4);
  ASSERT_EQ(run.y.nt(), 5);
  EXPECT_LT((detail::flat(run.y) - a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(mp.residual(a).cwiseAbs().maxCoeff(), 1e-14);

  // the oracle's finite-difference Jacobian matches the solver's linearization
  LinearizedOperator L = assemble_L(o.trajectory(), run.y, eps, AnalyticOddNonlinearity::sine_gordon(), 4);
  EXPECT_LT((mp.fd_jacobian(a) - columns(L)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Solver, OracleWithoutDriveHasZeroResidual) {
  oracle::MiniatureProblem mp{unit_orbit().trajectory().coeffs(), unit_orbit().period, 0.2, 3, 3,
                              [](double) { return 0.0; }};
  EXPECT_EQ(mp.residual(Eigen::VectorXd::Zero(mp.size())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solver, DefaultRunAtEpsPointOne) {
  SolverConfig cfg;
  auto sg = AnalyticOddNonlinearity::sine_gordon();
  SolverRun run = nash_moser_solve(unit_orbit().trajectory(), 0.1, cfg, sg);
  EXPECT_TRUE(run.converged);
  EXPECT_TRUE(run.stage_contraction);
  ASSERT_EQ(run.stages.size(), 2u);
  EXPECT_EQ(run.stages[0].N, 55);
  EXPECT_EQ(run.stages[1].N, 256);
  EXPECT_TRUE(run.capped);
  EXPECT_EQ(run.nf_steps, 8);
  EXPECT_LE(run.final_residual, 1e-10);
  EXPECT_LE(verify_residual(run, sg), 1e-9);
  EXPECT_NEAR(norm_s(run.w, 1.0), 1.3960237096458542e-4, 1e-9);
}

TEST(Schedule, Values) {
  EXPECT_EQ(truncation_schedule(0.1, 256), (std::vector<int>{55, 256}));
  EXPECT_EQ(truncation_schedule(0.5, 256), (std::vector<int>{3, 9, 81, 256}));
  EXPECT_EQ(truncation_schedule(0.1, 40), (std::vector<int>{40}));
  EXPECT_THROW(truncation_schedule(1.0, 256), DomainError);
  SolverConfig cfg;
  EXPECT_EQ(tau_band(0.1, kTwoPi, 2, cfg), 64);
  EXPECT_EQ(tau_band(0.5, kTwoPi, 2, cfg), 16);
}

TEST(Config, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.sigma = 2.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.bar_s = 5.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.grid_factor = 2;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(nash_moser_solve(unit_orbit().trajectory(), 0.1, cfg, AnalyticOddNonlinearity::sine_gordon()),
               ConfigError);
}
