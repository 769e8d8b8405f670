#pragma once

// Independent reference computations for the test suites. Nothing here calls the solver paths it checks.

#include <Eigen/Dense>

#include <boost/math/special_functions/ellint_1.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracle {

constexpr double pi = std::numbers::pi;

// Period of p'' = -p - beta p^3 from p(0) = a, p'(0) = 0 via the complete elliptic integral.
inline double duffing_period(double beta, double a) {
  const double W2 = 1.0 + beta * a * a;
  const double m = beta * a * a / (2.0 * W2);
  double K;
  if (m >= 0.0) {
    K = boost::math::ellint_1(std::sqrt(m));
  } else {
    double mm = -m / (1.0 - m);
    K = boost::math::ellint_1(std::sqrt(mm)) / std::sqrt(1.0 - m);
  }
  return 4.0 * K / std::sqrt(W2);
}

// Root in eps of -k^2 + 1/(1+eps^2) + eps^2 lambda by plain bisection in eps.
inline double divisor_root_bisect(int k, double lambda) {
  auto phi = [&](double e) { return -double(k) * k + 1.0 / (1.0 + e * e) + e * e * lambda; };
  double lo = 0.0, hi = 1.0;
  while (phi(hi) < 0.0) hi *= 2.0;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-16 * std::max(1.0, std::abs(b)); };
  auto r = boost::math::tools::bisect(phi, lo, hi, tol);
  return 0.5 * (r.first + r.second);
}

// (1/pi) int_0^{2 pi} g(x) sin(k x) dx by the trapezoid rule on n points.
inline double sine_coeff(const std::function<double(double)>& g, int k, int n = 512) {
  double s = 0.0;
  for (int l = 0; l < n; ++l) {
    double x = 2.0 * pi * l / n;
    s += g(x) * std::sin(k * x);
  }
  return 2.0 * s / n;
}

// Even trajectory from cosine coefficients.
inline double cos_series(const Eigen::VectorXd& c, double period, double tau) {
  double s = 0.0;
  for (int j = 0; j < c.size(); ++j) s += c[j] * std::cos(2.0 * pi * j * tau / period);
  return s;
}

// Fully truncated w-equation: unknowns a(j, k), j <= J, 2 <= k <= N, residual
//   (1/omega^2 - k^2 + eps^2 (2 pi j/p)^2) a_jk + eps^2 G_jk,  G = projection of -f(eps U)/(eps^3 omega^2),
// with U = v(tau) sin x + sum a_jk cos(2 pi j tau/p) sin kx. Quadrature by direct trapezoid sums.
struct MiniatureProblem {
  Eigen::VectorXd v_coeffs;
  double period;
  double eps;
  int N, J;
  std::function<double(double)> f_over_eps3;  // U -> f(eps U)/eps^3
  int mt = 128, mx = 64;

  int size() const { return (N - 1) * (J + 1); }

  Eigen::VectorXd residual(const Eigen::VectorXd& a) const {
    const double om2 = 1.0 + eps * eps;
    Eigen::VectorXd G = Eigen::VectorXd::Zero(size());
    for (int i = 0; i < mt; ++i) {
      double tau = period * i / mt;
      double v = cos_series(v_coeffs, period, tau);
      for (int l = 0; l < mx; ++l) {
        double x = 2.0 * pi * l / mx;
        double U = v * std::sin(x);
        for (int k = 2; k <= N; ++k)
          for (int j = 0; j <= J; ++j)
            U += a[(k - 2) * (J + 1) + j] * std::cos(2.0 * pi * j * tau / period) * std::sin(k * x);
        double g = -f_over_eps3(U) / om2;
        for (int k = 2; k <= N; ++k)
          for (int j = 0; j <= J; ++j) {
            double w = (j == 0 ? 1.0 : 2.0) / mt * (2.0 / mx);
            G[(k - 2) * (J + 1) + j] += w * g * std::cos(2.0 * pi * j * tau / period) * std::sin(k * x);
          }
      }
    }
    Eigen::VectorXd r(size());
    for (int k = 2; k <= N; ++k)
      for (int j = 0; j <= J; ++j) {
        int idx = (k - 2) * (J + 1) + j;
        double om = 2.0 * pi * j / period;
        r[idx] = (1.0 / om2 - double(k) * k + eps * eps * om * om) * a[idx] + eps * eps * G[idx];
      }
    return r;
  }

  Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& a, double h = 1e-6) const {
    Eigen::MatrixXd Jm(size(), size());
    for (int c = 0; c < size(); ++c) {
      Eigen::VectorXd p = a, m = a;
      p[c] += h, m[c] -= h;
      Jm.col(c) = (residual(p) - residual(m)) / (2.0 * h);
    }
    return Jm;
  }

  // Undamped Newton from zero with the finite-difference Jacobian.
  Eigen::VectorXd newton(int max_iter = 30, double tol = 1e-15) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(size());
    for (int it = 0; it < max_iter; ++it) {
      Eigen::VectorXd r = residual(a);
      if (r.cwiseAbs().maxCoeff() <= tol) return a;
      Eigen::VectorXd d = fd_jacobian(a).fullPivLu().solve(-r);
      a += d;
      if (d.cwiseAbs().maxCoeff() <= 1e-17) return a;
    }
    if (residual(a).cwiseAbs().maxCoeff() > 1e-12) throw std::runtime_error("oracle Newton diverged");
    return a;
  }
};

}  // namespace oracle
