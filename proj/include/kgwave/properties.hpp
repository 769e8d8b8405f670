#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fourier_space.hpp"
#include "transform.hpp"

namespace kgwave {

// Random field with Gaussian coefficients damped like 1 / ((1+j)(1+k))^decay.
inline SpaceTimeField random_field(std::mt19937_64& rng, double period, int nx, int nt, double decay = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpaceTimeField w(period, nx, nt);
  for (int k = 2; k <= nx; ++k)
    for (int j = 0; j <= nt; ++j) w(j, k) = g(rng) / std::pow((1.0 + j) * (1.0 + k), decay);
  return w;
}

struct ProjectionCheck {
  double lp1_ratio = 0.0;  // ||Pi_N h||_{m2} / (N^{m2-m1} ||h||_{m1}), must be <= 1
  double lp2_ratio = 0.0;  // ||(I-Pi_N) h||_{m1} / (N^{-(m2-m1)} ||h||_{m2}), must be <= 1
};

inline ProjectionCheck projection_ratios(const SpaceTimeField& h, int N, double m1, double m2) {
  ProjectionCheck c;
  double a = norm_s(h, m1), b = norm_s(h, m2);
  if (a > 0.0) c.lp1_ratio = norm_s(pi_N(h, N), m2) / (std::pow(double(N), m2 - m1) * a);
  if (b > 0.0) c.lp2_ratio = norm_s(pi_N_complement(h, N), m1) / (std::pow(double(N), m1 - m2) * b);
  return c;
}

// Norm of a real grid function (rows tau, columns x, both periodic) from its complex 2D DFT:
// sum (1+|j|)^2 max(|k|,1)^{2s} |c_jk|^2.
inline double tame_norm(const Eigen::MatrixXd& g, double s) {
  const int mt = int(g.rows()), mx = int(g.cols());
  using C = std::complex<double>;
  Eigen::MatrixXcd Ex(mx, mx), Et(mt, mt);
  for (int l = 0; l < mx; ++l)
    for (int k = 0; k < mx; ++k) Ex(l, k) = std::polar(1.0 / mx, -kTwoPi * double((long(l) * k) % mx) / mx);
  for (int i = 0; i < mt; ++i)
    for (int j = 0; j < mt; ++j) Et(j, i) = std::polar(1.0 / mt, -kTwoPi * double((long(i) * j) % mt) / mt);
  Eigen::MatrixXcd c = Et * g.cast<C>() * Ex;
  double acc = 0.0;
  for (int j = 0; j < mt; ++j)
    for (int k = 0; k < mx; ++k) {
      int jj = std::min(j, mt - j), kk = std::max(std::min(k, mx - k), 1);
      acc += (1.0 + jj) * (1.0 + jj) * std::pow(double(kk), 2.0 * s) * std::norm(c(j, k));
    }
  return std::sqrt(acc);
}

// ||u1 u2||_{bs} / (||u1||_s ||u2||_{bs} + ||u1||_{bs} ||u2||_s), products formed on an alias-free grid.
inline double tame_ratio(const SpaceTimeField& u1, const SpaceTimeField& u2, double s, double bs) {
  const int nx = std::max(u1.nx(), u2.nx()), nt = std::max(u1.nt(), u2.nt());
  SpaceTimeGrid G(u1.period(), nx, nt, 4 * std::max(nx, 2), 4 * std::max(nt, 2));
  Eigen::MatrixXd a = G.to_grid(u1), b = G.to_grid(u2);
  Eigen::MatrixXd ab = a.cwiseProduct(b);
  double den = tame_norm(a, s) * tame_norm(b, bs) + tame_norm(a, bs) * tame_norm(b, s);
  return den > 0.0 ? tame_norm(ab, bs) / den : 0.0;
}

struct PropertySuiteResult {
  int samples = 0;
  double worst_lp1 = 0.0;
  double worst_lp2 = 0.0;
  double tame_C_fit = 0.0;       // max ratio over the first half
  double tame_C_refresh = 0.0;   // max ratio over the second half
  bool lp_ok = false;
  bool tame_ok = false;          // refresh stays within twice the fitted constant
};

inline PropertySuiteResult run_projection_and_tame_suite(std::uint64_t seed, int samples = 1000, double s = 1.0,
                                                         double bs = 8.0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> band(3, 12), tband(0, 8), cut(2, 10);
  std::uniform_real_distribution<double> mm(0.0, 3.0), per(2.0, 10.0);
  PropertySuiteResult r;
  r.samples = samples;
  for (int i = 0; i < samples; ++i) {
    double p = per(rng);
    int nx = band(rng), nt = tband(rng), N = cut(rng);
    double m1 = mm(rng), m2 = m1 + mm(rng);
    SpaceTimeField h = random_field(rng, p, nx, nt, 0.5);
    ProjectionCheck c = projection_ratios(h, N, m1, m2);
    r.worst_lp1 = std::max(r.worst_lp1, c.lp1_ratio);
    r.worst_lp2 = std::max(r.worst_lp2, c.lp2_ratio);
    SpaceTimeField u1 = random_field(rng, p, std::min(nx, 8), std::min(nt, 6), 1.0);
    SpaceTimeField u2 = random_field(rng, p, std::min(nx, 8), std::min(nt, 6), 1.0);
    double t = tame_ratio(u1, u2, s, bs);
    (i < samples / 2 ? r.tame_C_fit : r.tame_C_refresh) = std::max(i < samples / 2 ? r.tame_C_fit : r.tame_C_refresh, t);
  }
  r.lp_ok = r.worst_lp1 <= 1.0 + 1e-12 && r.worst_lp2 <= 1.0 + 1e-12;
  r.tame_ok = r.tame_C_fit > 0.0 && r.tame_C_refresh <= 2.0 * r.tame_C_fit;
  return r;
}

// sup over k = 2..k_max and an eps grid of (1 + k^2) / |1/(1+eps^2) - k^2|.
inline double j_eps_inverse_sup(int k_max = 1000, double eps_max = 0.5, int n_eps = 501) {
  double sup = 0.0;
  for (int i = 0; i < n_eps; ++i) {
    double e = eps_max * i / (n_eps - 1);
    for (int k = 2; k <= k_max; ++k) sup = std::max(sup, j_eps_inverse_gain(k, e));
  }
  return sup;
}

}  // namespace kgwave
