#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "detail/gmres.hpp"
#include "detail/parallel.hpp"
#include "divisors.hpp"
#include "errors.hpp"
#include "fourier_space.hpp"
#include "nonlinearity.hpp"
#include "trajectory.hpp"
#include "transform.hpp"

namespace kgwave {

// Diagonal symbol of J_eps - eps^2 d_tautau on cos(2 pi j tau/p) sin(kx).
inline double diag_symbol(int j, int k, double eps, double period) {
  double om = kTwoPi * j / period;
  return 1.0 / (1.0 + eps * eps) - double(k) * k + eps * eps * om * om;
}

inline Eigen::MatrixXd diag_symbols(int nx, int nt, double eps, double period) {
  Eigen::MatrixXd D(nt + 1, std::max(nx - 1, 0));
  for (int k = 2; k <= nx; ++k)
    for (int j = 0; j <= nt; ++j) D(j, k - 2) = diag_symbol(j, k, eps, period);
  return D;
}

// Orthonormalizing scale per flattened index: 1 for j = 0, 1/sqrt(2) otherwise.
inline Eigen::VectorXd orthonormal_scale(int nx, int nt) {
  Eigen::VectorXd s(std::max(nx - 1, 0) * (nt + 1));
  for (int kk = 0; kk < nx - 1; ++kk)
    for (int j = 0; j <= nt; ++j) s[kk * (nt + 1) + j] = j == 0 ? 1.0 : std::sqrt(0.5);
  return s;
}

namespace detail {
// Cosine moments G(n) = (1/mt) sum_i cos(2 pi n i / mt) g_i for n = 0..nmax, for every column of g.
inline Eigen::MatrixXd cos_moments(const Eigen::MatrixXd& g, int nmax) {
  const int mt = int(g.rows());
  Eigen::MatrixXd C(nmax + 1, mt);
  for (int n = 0; n <= nmax; ++n)
    for (int i = 0; i < mt; ++i) C(n, i) = std::cos(kTwoPi * double((long(n) * i) % mt) / mt) / mt;
  return C * g;
}

// tau-Galerkin block 0.5 (G(|j-j'|) + G(j+j')) from a column of cos moments.
inline Eigen::MatrixXd toeplitz_hankel(const Eigen::Ref<const Eigen::VectorXd>& G, int nt) {
  Eigen::MatrixXd K(nt + 1, nt + 1);
  for (int j = 0; j <= nt; ++j)
    for (int jp = 0; jp <= nt; ++jp) K(j, jp) = 0.5 * (G[std::abs(j - jp)] + G[j + jp]);
  return K;
}
}  // namespace detail

// Linearization J_eps + eps^2(-d_tautau + D_w g~) on bands (nx, nt), acting on raw coefficients
// flattened column-major: index = j + (nt+1)(k-2).
class LinearizedOperator {
 public:
  LinearizedOperator(std::shared_ptr<const SpaceTimeGrid> grid, Eigen::MatrixXd multiplier, int nx, int nt,
                     double eps)
      : grid_(std::move(grid)), m_(std::move(multiplier)), nx_(nx), nt_(nt), eps_(eps) {
    D_ = diag_symbols(nx, nt, eps, grid_->period());
  }

  int nx() const { return nx_; }
  int nt() const { return nt_; }
  double eps() const { return eps_; }
  double period() const { return grid_->period(); }
  int size() const { return std::max(nx_ - 1, 0) * (nt_ + 1); }
  const Eigen::MatrixXd& multiplier() const { return m_; }
  const Eigen::MatrixXd& diagonal() const { return D_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& a) const {
    Eigen::Map<const Eigen::MatrixXd> A(a.data(), nt_ + 1, nx_ - 1);
    const auto& g = *grid_;
    Eigen::MatrixXd h = g.cos_table().leftCols(nt_ + 1) * A * g.sin_table().topRows(nx_ - 1);
    h.array() *= m_.array();
    Eigen::MatrixXd P = g.cos_table().leftCols(nt_ + 1).transpose() * h * g.sin_table().topRows(nx_ - 1).transpose();
    P *= 2.0 / g.mx() / g.mt();
    P.bottomRows(nt_).array() *= 2.0;
    Eigen::VectorXd out(size());
    Eigen::Map<Eigen::MatrixXd> O(out.data(), nt_ + 1, nx_ - 1);
    O = D_.cwiseProduct(A) + eps_ * eps_ * P;
    return out;
  }

  // Matrix in the orthonormal basis; symmetric by construction.
  Eigen::MatrixXd dense_symmetric() const {
    const int nk = nx_ - 1, nj = nt_ + 1, n = size();
    const auto& g = *grid_;
    Eigen::MatrixXd Sx = g.sin_table().topRows(nk);
    Eigen::MatrixXd B(g.mt(), nk * nk);  // B_i(k, k') = (2/mx) sum_l s_k s_k' m_il
    for (int i = 0; i < g.mt(); ++i) {
      Eigen::MatrixXd Bi = Sx * m_.row(i).asDiagonal() * Sx.transpose() * (2.0 / g.mx());
      B.row(i) = Eigen::Map<Eigen::RowVectorXd>(Bi.data(), nk * nk);
    }
    Eigen::MatrixXd G = detail::cos_moments(B, 2 * nt_);
    Eigen::VectorXd sq(nj);
    for (int j = 0; j < nj; ++j) sq[j] = j == 0 ? 1.0 : std::sqrt(2.0);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int kp = 0; kp < nk; ++kp)
      for (int k = 0; k < nk; ++k) {
        Eigen::MatrixXd K = detail::toeplitz_hankel(G.col(k + nk * kp), nt_);
        L.block(k * nj, kp * nj, nj, nj) = eps_ * eps_ * (sq.asDiagonal() * K * sq.asDiagonal());
      }
    for (int k = 0; k < nk; ++k)
      for (int j = 0; j < nj; ++j) L(k * nj + j, k * nj + j) += D_(j, k);
    return L;
  }

  // Per-k diagonal blocks (x-averaged coupling) in raw coordinates and in the symmetric basis.
  void diagonal_blocks(std::vector<Eigen::MatrixXd>& raw, std::vector<Eigen::MatrixXd>* sym) const {
    const int nk = nx_ - 1, nj = nt_ + 1;
    const auto& g = *grid_;
    Eigen::MatrixXd S2 = g.sin_table().topRows(nk).array().square().matrix();
    Eigen::MatrixXd Bkk = m_ * S2.transpose() * (2.0 / g.mx());  // mt x nk
    Eigen::MatrixXd G = detail::cos_moments(Bkk, 2 * nt_);
    Eigen::VectorXd c(nj), sq(nj);
    for (int j = 0; j < nj; ++j) c[j] = j == 0 ? 1.0 : 2.0, sq[j] = std::sqrt(c[j]);
    raw.assign(nk, Eigen::MatrixXd());
    if (sym) sym->assign(nk, Eigen::MatrixXd());
    for (int k = 0; k < nk; ++k) {
      Eigen::MatrixXd K = detail::toeplitz_hankel(G.col(k), nt_);
      raw[k] = eps_ * eps_ * (c.asDiagonal() * K);
      raw[k].diagonal() += D_.col(k);
      if (sym) {
        (*sym)[k] = eps_ * eps_ * (sq.asDiagonal() * K * sq.asDiagonal());
        (*sym)[k].diagonal() += D_.col(k);
      }
    }
  }

  // Maps a flattened index to (j, k).
  std::pair<int, int> mode_of(int idx) const { return {idx % (nt_ + 1), idx / (nt_ + 1) + 2}; }

 private:
  std::shared_ptr<const SpaceTimeGrid> grid_;
  Eigen::MatrixXd m_, D_;
  int nx_, nt_;
  double eps_;
};

// F(V, y - S) = (J_eps - eps^2 d_tautau)(y - S) + eps^2 g~(V, y - S), Galerkin-projected onto bands (nx, nt).
// S is an optional fixed offset (the accumulated normal-form shift).
class StageProblem {
 public:
  StageProblem(const Trajectory& V, double eps, AnalyticOddNonlinearity model, int nx, int nt,
               const SpaceTimeField* offset = nullptr, int grid_factor = 4)
      : eps_(eps), omega2_(1.0 + eps * eps), model_(std::move(model)), nx_(nx), nt_(nt) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
    if (nx < 2 || nt < 0) throw DomainError("stage bands must satisfy nx >= 2, nt >= 0");
    if (offset && std::abs(offset->period() - V.period()) > 1e-12 * V.period())
      throw ShapeError("offset period differs from trajectory period");
    const int gx = std::max(nx, offset ? offset->nx() : 1);
    const int gt = std::max(nt, offset ? offset->nt() : 0);
    grid_ = std::make_shared<const SpaceTimeGrid>(V.period(), gx, gt, grid_factor * std::max(gx, 2),
                                                  grid_factor * std::max({gt, V.band(), 2}));
    Eigen::VectorXd v = grid_->tau_values(V.coeffs());
    base_ = v * grid_->sin1();
    if (offset) {
      base_ -= grid_->to_grid(*offset);
      offset_ = offset->resized(nx, nt);
    } else {
      offset_ = SpaceTimeField(V.period(), nx, nt);
    }
  }

  int nx() const { return nx_; }
  int nt() const { return nt_; }
  double eps() const { return eps_; }
  double period() const { return grid_->period(); }
  const SpaceTimeGrid& grid() const { return *grid_; }
  std::shared_ptr<const SpaceTimeGrid> grid_ptr() const { return grid_; }

  Eigen::MatrixXd u_grid(const SpaceTimeField& y) const {
    check(y);
    Eigen::MatrixXd U = base_ + grid_->to_grid(y);
    double mx = U.cwiseAbs().maxCoeff();
    if (eps_ * mx > model_.trust_radius())
      throw DomainError("eps*sup|U| = " + std::to_string(eps_ * mx) + " exceeds trust radius");
    return U;
  }

  // g~ on the grid: -f(eps U)/(eps^3 omega^2), before Q-projection.
  Eigen::MatrixXd g_grid(const Eigen::MatrixXd& U) const {
    return U.unaryExpr([this](double u) { return -model_.scaled_eval(u, eps_) / omega2_; });
  }

  // Q-projected g~(V, y - S) on the stage bands.
  SpaceTimeField g_field(const SpaceTimeField& y) const { return grid_->from_grid(g_grid(u_grid(y)), nx_, nt_); }

  SpaceTimeField residual(const SpaceTimeField& y) const {
    Eigen::MatrixXd U = u_grid(y);
    SpaceTimeField G = grid_->from_grid(g_grid(U), nx_, nt_);
    SpaceTimeField r(period(), nx_, nt_);
    r.coeffs() = diag_symbols(nx_, nt_, eps_, period()).cwiseProduct(y.coeffs() - offset_.coeffs()) +
                 eps_ * eps_ * G.coeffs();
    return r;
  }

  LinearizedOperator linearize(const SpaceTimeField& y) const {
    Eigen::MatrixXd U = u_grid(y);
    Eigen::MatrixXd m = U.unaryExpr([this](double u) { return -model_.scaled_deriv(u, eps_) / omega2_; });
    return LinearizedOperator(grid_, std::move(m), nx_, nt_, eps_);
  }

 private:
  void check(const SpaceTimeField& y) const {
    if (y.nx() != nx_ || y.nt() != nt_) throw ShapeError("field bands do not match the stage bands");
    if (std::abs(y.period() - period()) > 1e-12 * period()) throw ShapeError("field period mismatch");
  }

  double eps_, omega2_;
  AnalyticOddNonlinearity model_;
  int nx_, nt_;
  std::shared_ptr<const SpaceTimeGrid> grid_;
  Eigen::MatrixXd base_;
  SpaceTimeField offset_;
};

// ---- inversion -------------------------------------------------------------

struct InverseParams {
  ResonanceParams resonance;
  double C = 1.0;                  // constant of the inverse-norm law, sigma_min * C * N^gamma / eps^(l-1) >= 1
  int dense_limit = 1000;          // unknowns up to which the dense symmetric path is used
  double singular_floor = 1e-11;   // relative to the operator scale
  double gmres_rtol = 1e-11;
  int gmres_restart = 60;
  int gmres_max_iters = 600;
  bool estimate_sigma = true;      // block eigen estimate on the iterative path
};

struct InverseReport {
  double sigma_min = 0.0;
  double ratio = 0.0;  // sigma_min * C * N^gamma / eps^(l-1)
  int culprit_k = 0;
  int culprit_j = 0;
  std::string method;
  int iterations = 0;
  double relative_residual = 0.0;
};

struct LinearSolution {
  Eigen::VectorXd x;
  InverseReport report;
};

inline LinearSolution invert_L_N(const LinearizedOperator& L, const Eigen::VectorXd& rhs, double eps,
                                 const InverseParams& prm) {
  if (rhs.size() != L.size()) throw ShapeError("rhs size does not match operator");
  LinearSolution out;
  auto& rep = out.report;
  const double scale_law = std::pow(double(L.nx()), prm.resonance.gamma()) / std::pow(eps, prm.resonance.l - 1.0);
  auto singular = [&](double smin, double smax, int k, int j) {
    if (smin < prm.singular_floor * std::max(1.0, smax))
      throw NearSingularError("near-singular linearization: sigma_min=" + detail::shortest(smin) +
                                  " at divisor (k=" + std::to_string(k) + ", j=" + std::to_string(j) + ")",
                              k, j, smin);
  };
  if (L.size() <= prm.dense_limit) {
    Eigen::MatrixXd Lh = L.dense_symmetric();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lh);
    if (es.info() != Eigen::Success) throw InternalError("symmetric eigensolver failed");
    const auto& lam = es.eigenvalues();
    int imin = 0;
    for (int i = 1; i < lam.size(); ++i)
      if (std::abs(lam[i]) < std::abs(lam[imin])) imin = i;
    int idx;
    es.eigenvectors().col(imin).cwiseAbs().maxCoeff(&idx);
    auto [j, k] = L.mode_of(idx);
    rep.sigma_min = std::abs(lam[imin]);
    rep.culprit_k = k, rep.culprit_j = j;
    rep.method = "dense";
    singular(rep.sigma_min, lam.cwiseAbs().maxCoeff(), k, j);
    Eigen::VectorXd s = orthonormal_scale(L.nx(), L.nt());
    // Lh = diag(s) L diag(s)^-1, so Lh (s a) = s r.
    Eigen::VectorXd b = es.eigenvectors() * (es.eigenvalues().cwiseInverse().asDiagonal() *
                                             (es.eigenvectors().transpose() * s.cwiseProduct(rhs)));
    out.x = b.cwiseQuotient(s);
  } else {
    std::vector<Eigen::MatrixXd> raw, sym;
    L.diagonal_blocks(raw, prm.estimate_sigma ? &sym : nullptr);
    const int nj = L.nt() + 1, nk = L.nx() - 1;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu(nk);
    std::vector<double> bmin(nk, 0.0), bmax(nk, 0.0);
    std::vector<int> bj(nk, 0);
    detail::parallel_for(nk, [&](int k) {
      lu[k].compute(raw[k]);
      if (prm.estimate_sigma) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym[k] + sym[k].transpose()));
        const auto& lam = es.eigenvalues();
        int imin = 0;
        for (int i = 1; i < lam.size(); ++i)
          if (std::abs(lam[i]) < std::abs(lam[imin])) imin = i;
        bmin[k] = std::abs(lam[imin]);
        bmax[k] = lam.cwiseAbs().maxCoeff();
        es.eigenvectors().col(imin).cwiseAbs().maxCoeff(&bj[k]);
      }
    });
    rep.method = "gmres";
    if (prm.estimate_sigma) {
      int kmin = int(std::min_element(bmin.begin(), bmin.end()) - bmin.begin());
      rep.sigma_min = bmin[kmin];
      rep.culprit_k = kmin + 2, rep.culprit_j = bj[kmin];
      singular(rep.sigma_min, *std::max_element(bmax.begin(), bmax.end()), rep.culprit_k, rep.culprit_j);
    }
    auto A = [&](const Eigen::VectorXd& x) { return L.apply(x); };
    auto M = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd y(x.size());
      for (int k = 0; k < nk; ++k) y.segment(k * nj, nj) = lu[k].solve(x.segment(k * nj, nj));
      return y;
    };
    out.x = Eigen::VectorXd::Zero(rhs.size());
    auto gr = detail::gmres(A, M, rhs, out.x, prm.gmres_rtol, prm.gmres_restart, prm.gmres_max_iters);
    rep.iterations = gr.iterations;
    rep.relative_residual = gr.relative_residual;
    if (!gr.converged && gr.relative_residual > 1e-6)
      throw NearSingularError("iterative solve stalled (relative residual " + detail::shortest(gr.relative_residual) +
                                  "); suspected divisor (k=" + std::to_string(rep.culprit_k) +
                                  ", j=" + std::to_string(rep.culprit_j) + ")",
                              rep.culprit_k, rep.culprit_j, rep.sigma_min);
  }
  rep.ratio = rep.sigma_min * prm.C * scale_law;
  return out;
}

}  // namespace kgwave
