#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace kgwave {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SobolevIndex {
  double s = 1.0;
  SobolevIndex() = default;
  SobolevIndex(double v) : s(v) {  // NOLINT: implicit by design
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("Sobolev index must be finite and >= 0");
  }
};

// Odd 2pi-periodic function of x in Q-space: sum_{k=2}^{band} c_k sin(kx).
class SpatialField {
 public:
  explicit SpatialField(int band = 1) : band_(band), c_(Eigen::VectorXd::Zero(std::max(band - 1, 0))) {
    if (band < 1) throw DomainError("spatial band must be >= 1");
  }

  static SpatialField from_map(int band, const std::map<int, double>& m) {
    SpatialField f(band);
    for (auto [k, v] : m) {
      if (k < 2) throw DomainError("mode k=" + std::to_string(k) + " is not in Q-space (k >= 2 required)");
      if (k > band) throw ShapeError("mode k=" + std::to_string(k) + " exceeds band " + std::to_string(band));
      if (!std::isfinite(v)) throw DomainError("non-finite coefficient");
      f.c_[k - 2] = v;
    }
    return f;
  }

  int band() const { return band_; }
  double operator()(int k) const {
    if (k < 2) throw DomainError("mode k<2 is not in Q-space");
    return k > band_ ? 0.0 : c_[k - 2];
  }
  double& operator()(int k) {
    if (k < 2 || k > band_) throw ShapeError("mode outside band");
    return c_[k - 2];
  }
  const Eigen::VectorXd& coeffs() const { return c_; }
  Eigen::VectorXd& coeffs() { return c_; }

  double eval(double x) const {
    double s = 0.0;
    for (int k = 2; k <= band_; ++k) s += c_[k - 2] * std::sin(k * x);
    return s;
  }
  double abs_sum() const { return c_.cwiseAbs().sum(); }

  friend SpatialField operator+(SpatialField a, const SpatialField& b) {
    if (a.band_ != b.band_) throw ShapeError("band mismatch");
    a.c_ += b.c_;
    return a;
  }
  friend SpatialField operator-(SpatialField a, const SpatialField& b) {
    if (a.band_ != b.band_) throw ShapeError("band mismatch");
    a.c_ -= b.c_;
    return a;
  }
  friend SpatialField operator*(double s, SpatialField a) {
    a.c_ *= s;
    return a;
  }

 private:
  int band_;
  Eigen::VectorXd c_;
};

// Element of Gamma_s: sum_{j>=0, 2<=k<=nx} a(j, k-2) cos(2 pi j tau / p) sin(k x).
// Storage is even in tau and odd in x by construction.
class SpaceTimeField {
 public:
  SpaceTimeField() : SpaceTimeField(kTwoPi, 1, 0) {}
  SpaceTimeField(double period, int nx, int nt)
      : period_(period), nx_(nx), nt_(nt), a_(Eigen::MatrixXd::Zero(nt + 1, std::max(nx - 1, 0))) {
    if (!(period > 0.0) || !std::isfinite(period)) throw DomainError("period must be positive");
    if (nx < 1 || nt < 0) throw DomainError("invalid bands");
  }

  double period() const { return period_; }
  int nx() const { return nx_; }
  int nt() const { return nt_; }
  const Eigen::MatrixXd& coeffs() const { return a_; }
  Eigen::MatrixXd& coeffs() { return a_; }

  double operator()(int j, int k) const {
    if (k < 2) throw DomainError("mode k<2 is not in Q-space");
    if (j < 0) j = -j;
    if (k > nx_ || j > nt_) return 0.0;
    return a_(j, k - 2);
  }
  double& operator()(int j, int k) {
    if (k < 2 || k > nx_ || j < 0 || j > nt_) throw ShapeError("mode outside bands");
    return a_(j, k - 2);
  }

  double omega_tau() const { return kTwoPi / period_; }

  // Spatial profile at fixed tau.
  SpatialField slice(double tau, int tau_derivs = 0) const {
    SpatialField f(nx_);
    const double w = omega_tau();
    for (int j = 0; j <= nt_; ++j) {
      double phase = w * j * tau, c;
      switch (tau_derivs) {
        case 0: c = std::cos(phase); break;
        case 1: c = -w * j * std::sin(phase); break;
        case 2: c = -(w * j) * (w * j) * std::cos(phase); break;
        default: throw DomainError("slice supports up to two tau derivatives");
      }
      if (c != 0.0) f.coeffs() += c * a_.row(j).transpose();
    }
    return f;
  }

  double eval(double tau, double x) const { return slice(tau).eval(x); }

  // Zero-padded or truncated copy with new bands.
  SpaceTimeField resized(int nx, int nt) const {
    SpaceTimeField r(period_, nx, nt);
    int jm = std::min(nt, nt_), km = std::min(nx, nx_) - 1;
    if (km > 0) r.a_.topLeftCorner(jm + 1, km) = a_.topLeftCorner(jm + 1, km);
    return r;
  }

  friend SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) {
    a.check_same(b);
    a.a_ += b.a_;
    return a;
  }
  friend SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) {
    a.check_same(b);
    a.a_ -= b.a_;
    return a;
  }
  friend SpaceTimeField operator*(double s, SpaceTimeField a) {
    a.a_ *= s;
    return a;
  }
  void check_same(const SpaceTimeField& b) const {
    if (nx_ != b.nx_ || nt_ != b.nt_) throw ShapeError("band mismatch between fields");
    if (std::abs(period_ - b.period_) > 1e-12 * period_) throw ShapeError("period mismatch between fields");
  }

 private:
  double period_;
  int nx_, nt_;
  Eigen::MatrixXd a_;
};

// ---- norms --------------------------------------------------------------

// Squared multiplicity-weighted norm of the real storage, with (1+|j|)^2 |k|^{2s} weights on the complex coefficients.
inline double norm_s(const SpaceTimeField& w, SobolevIndex s) {
  double acc = 0.0;
  const auto& a = w.coeffs();
  for (int kk = 0; kk < a.cols(); ++kk) {
    double kw = std::pow(double(kk + 2), 2.0 * s.s);
    for (int j = 0; j < a.rows(); ++j) {
      double v = a(j, kk);
      if (v == 0.0) continue;
      acc += (j == 0 ? 0.5 : 0.25 * (1.0 + j) * (1.0 + j)) * kw * v * v;
    }
  }
  return std::sqrt(acc);
}

inline double norm_s(const SpatialField& w, SobolevIndex s) {
  double acc = 0.0;
  for (int k = 2; k <= w.band(); ++k) acc += 0.5 * std::pow(double(k), 2.0 * s.s) * w(k) * w(k);
  return std::sqrt(acc);
}

inline SpaceTimeField pi_N(const SpaceTimeField& w, int N) {
  if (N < 1) throw DomainError("pi_N requires N >= 1");
  SpaceTimeField r = w;
  for (int k = N + 1; k <= w.nx(); ++k) r.coeffs().col(k - 2).setZero();
  return r;
}

inline SpaceTimeField pi_N_complement(const SpaceTimeField& w, int N) {
  if (N < 1) throw DomainError("pi_N requires N >= 1");
  SpaceTimeField r = w;
  for (int k = 2; k <= std::min(N, w.nx()); ++k) r.coeffs().col(k - 2).setZero();
  return r;
}

// ---- P / Q projections on uniform x samples x_l = 2 pi l / M ------------

inline double project_P(const std::vector<double>& g) {
  const int M = int(g.size());
  if (M < 4) throw AliasingError("project_P needs at least 4 samples");
  double s = 0.0;
  for (int l = 0; l < M; ++l) s += g[l] * std::sin(kTwoPi * l / M);
  return 2.0 * s / M;
}

inline SpatialField project_Q(const std::vector<double>& g, int band) {
  const int M = int(g.size());
  if (M < 4 * band)
    throw AliasingError("grid of " + std::to_string(M) + " points too coarse for band " + std::to_string(band) +
                        " (need >= " + std::to_string(4 * band) + ")");
  SpatialField f(band);
  for (int k = 2; k <= band; ++k) {
    double s = 0.0;
    for (int l = 0; l < M; ++l) s += g[l] * std::sin(kTwoPi * double(k) * l / M);
    f(k) = 2.0 * s / M;
  }
  return f;
}

// ---- J_eps ---------------------------------------------------------------

inline double j_eps_symbol(int k, double eps) { return 1.0 / (1.0 + eps * eps) - double(k) * k; }

// Mode-wise gain of J_eps^{-1} from H^s to H^{s+2} with (1+k^2) weights.
inline double j_eps_inverse_gain(int k, double eps) {
  return (1.0 + double(k) * k) / std::abs(j_eps_symbol(k, eps));
}

inline SpatialField apply_J_eps(const SpatialField& w, double eps) {
  SpatialField r = w;
  for (int k = 2; k <= w.band(); ++k) r(k) *= j_eps_symbol(k, eps);
  return r;
}

inline SpatialField invert_J_eps(const SpatialField& w, double eps) {
  SpatialField r = w;
  for (int k = 2; k <= w.band(); ++k) {
    double d = j_eps_symbol(k, eps);
    if (d == 0.0) throw DomainError("J_eps singular at k=" + std::to_string(k));
    r(k) /= d;
  }
  return r;
}

inline SpaceTimeField apply_J_eps(const SpaceTimeField& w, double eps) {
  SpaceTimeField r = w;
  for (int k = 2; k <= w.nx(); ++k) r.coeffs().col(k - 2) *= j_eps_symbol(k, eps);
  return r;
}

inline SpaceTimeField invert_J_eps(const SpaceTimeField& w, double eps) {
  SpaceTimeField r = w;
  for (int k = 2; k <= w.nx(); ++k) r.coeffs().col(k - 2) /= j_eps_symbol(k, eps);
  return r;
}

// Second tau derivative, exact on the stored harmonics.
inline SpaceTimeField d_tautau(const SpaceTimeField& w) {
  SpaceTimeField r = w;
  const double om = w.omega_tau();
  for (int j = 0; j <= w.nt(); ++j) r.coeffs().row(j) *= -(om * j) * (om * j);
  return r;
}

// ---- serialization -------------------------------------------------------

inline nlohmann::json to_json(const SpaceTimeField& w) {
  nlohmann::json c = nlohmann::json::array();
  for (int kk = 0; kk < w.coeffs().cols(); ++kk)
    for (int j = 0; j < w.coeffs().rows(); ++j)
      if (w.coeffs()(j, kk) != 0.0) c.push_back({j, kk + 2, w.coeffs()(j, kk)});
  return {{"period", w.period()}, {"bands", {w.nx(), w.nt()}}, {"coeffs", c}};
}

inline SpaceTimeField field_from_json(const nlohmann::json& js) {
  SpaceTimeField w(js.at("period").get<double>(), js.at("bands").at(0).get<int>(), js.at("bands").at(1).get<int>());
  for (const auto& e : js.at("coeffs")) {
    int j = e.at(0).get<int>(), k = e.at(1).get<int>();
    if (k < 2) throw DomainError("mode k<2 is not in Q-space");
    w(j, k) = e.at(2).get<double>();
  }
  return w;
}

}  // namespace kgwave
