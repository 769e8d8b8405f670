#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "errors.hpp"
#include "fourier_space.hpp"

namespace kgwave {

// Uniform collocation grid tau_i = p i / mt, x_l = 2 pi l / mx with dense cos/sin tables.
// Grid values are stored as an (mt x mx) matrix.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid(double period, int nx, int nt, int mx, int mt)
      : period_(period), nx_(nx), nt_(nt), mx_(mx), mt_(mt) {
    if (mx < 2 * nx + 2 || mt < 2 * nt + 2)
      throw AliasingError("collocation grid " + std::to_string(mt) + "x" + std::to_string(mx) +
                          " too coarse for bands (" + std::to_string(nx) + ", " + std::to_string(nt) + ")");
    ct_.resize(mt, nt + 1);
    for (int i = 0; i < mt; ++i)
      for (int j = 0; j <= nt; ++j) ct_(i, j) = std::cos(kTwoPi * double((long(i) * j) % mt) / mt);
    sx_.resize(std::max(nx - 1, 0), mx);
    for (int k = 2; k <= nx; ++k)
      for (int l = 0; l < mx; ++l) sx_(k - 2, l) = std::sin(kTwoPi * double((long(k) * l) % mx) / mx);
    s1_.resize(mx);
    for (int l = 0; l < mx; ++l) s1_[l] = std::sin(kTwoPi * l / mx);
    pw_.resize(nt + 1);
    for (int j = 0; j <= nt; ++j) pw_[j] = (j == 0 ? 1.0 : 2.0) / mt;
  }

  // Grid sized with the usual 4x margin in each direction.
  static SpaceTimeGrid standard(double period, int nx, int nt) {
    return SpaceTimeGrid(period, nx, nt, 4 * std::max(nx, 2), 4 * std::max(nt, 2));
  }

  double period() const { return period_; }
  int nx() const { return nx_; }
  int nt() const { return nt_; }
  int mx() const { return mx_; }
  int mt() const { return mt_; }
  double tau(int i) const { return period_ * i / mt_; }
  double x(int l) const { return kTwoPi * l / mx_; }
  const Eigen::MatrixXd& cos_table() const { return ct_; }
  const Eigen::MatrixXd& sin_table() const { return sx_; }
  const Eigen::RowVectorXd& sin1() const { return s1_; }

  Eigen::MatrixXd to_grid(const SpaceTimeField& f) const {
    if (f.nx() > nx_ || f.nt() > nt_) throw ShapeError("field bands exceed grid bands");
    if (std::abs(f.period() - period_) > 1e-12 * period_) throw ShapeError("field period differs from grid period");
    if (f.nx() < 2) return Eigen::MatrixXd::Zero(mt_, mx_);
    return ct_.leftCols(f.nt() + 1) * f.coeffs() * sx_.topRows(f.nx() - 1);
  }

  // Galerkin projection of grid values onto bands (nx, nt) (or smaller).
  SpaceTimeField from_grid(const Eigen::MatrixXd& g, int nx = -1, int nt = -1) const {
    if (nx < 0) nx = nx_;
    if (nt < 0) nt = nt_;
    if (nx > nx_ || nt > nt_) throw ShapeError("requested bands exceed grid bands");
    SpaceTimeField f(period_, nx, nt);
    if (nx < 2) return f;
    Eigen::MatrixXd a = ct_.leftCols(nt + 1).transpose() * g * sx_.topRows(nx - 1).transpose();
    a *= 2.0 / mx_;
    for (int j = 0; j <= nt; ++j) a.row(j) *= pw_[j];
    f.coeffs() = a;
    return f;
  }

  // sin x component of each tau-row: (1/pi) int g sin x dx.
  Eigen::VectorXd project_P_rows(const Eigen::MatrixXd& g) const { return (2.0 / mx_) * (g * s1_.transpose()); }

  // Values of a cosine series on the tau grid.
  Eigen::VectorXd tau_values(const Eigen::VectorXd& cos_coeffs) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mt_);
    for (int i = 0; i < mt_; ++i)
      for (int j = 0; j < cos_coeffs.size(); ++j)
        out[i] += cos_coeffs[j] * std::cos(kTwoPi * double((long(i) * j) % mt_) / mt_);
    return out;
  }

  // Cosine coefficients 0..n of tau-grid samples (exact for bandlimited data with n < mt/2).
  Eigen::VectorXd tau_cos_coeffs(const Eigen::VectorXd& vals, int n) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    for (int j = 0; j <= n; ++j) {
      double s = 0.0;
      for (int i = 0; i < mt_; ++i) s += vals[i] * std::cos(kTwoPi * double((long(i) * j) % mt_) / mt_);
      c[j] = s * (j == 0 || 2 * j == mt_ ? 1.0 : 2.0) / mt_;
    }
    return c;
  }

 private:
  double period_;
  int nx_, nt_, mx_, mt_;
  Eigen::MatrixXd ct_, sx_;
  Eigen::RowVectorXd s1_;
  Eigen::VectorXd pw_;
};

}  // namespace kgwave
