#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fourier_space.hpp"

namespace kgwave {

// f(u) = sum_{m>=1} c_{2m+1} u^{2m+1}, stored as odd_coeffs = {c3, c5, ...}.
class AnalyticOddNonlinearity {
 public:
  static constexpr double kEpsSwitch = 1e-3;

  AnalyticOddNonlinearity(std::string name, std::vector<double> odd_coeffs, double trust_radius)
      : name_(std::move(name)), c_(std::move(odd_coeffs)), trust_(trust_radius) {
    if (c_.empty() || c_[0] == 0.0) throw DomainError("c3 must be nonzero (f'''(0) != 0)");
    validate();
  }

  static AnalyticOddNonlinearity sine_gordon(int terms = 20) {
    std::vector<double> c;
    double fact = 1.0;
    for (int m = 1; m <= terms; ++m) {
      fact *= double(2 * m) * double(2 * m + 1);
      c.push_back((m % 2 == 1 ? 1.0 : -1.0) / fact);
    }
    return AnalyticOddNonlinearity("sine-gordon", c, sine_series_trust(terms));
  }

  static AnalyticOddNonlinearity phi4(double trust_radius = 1e3) {
    return AnalyticOddNonlinearity("phi4", {1.0}, trust_radius);
  }

  static AnalyticOddNonlinearity custom(std::vector<double> odd_coeffs, double trust_radius = 10.0) {
    return AnalyticOddNonlinearity("custom", std::move(odd_coeffs), trust_radius);
  }

  // Test hook: f identically zero. Violates c3 != 0 on purpose.
  static AnalyticOddNonlinearity suppressed() {
    AnalyticOddNonlinearity f;
    f.name_ = "suppressed";
    f.c_ = {0.0};
    f.trust_ = std::numeric_limits<double>::infinity();
    return f;
  }

  const std::string& name() const { return name_; }
  const std::vector<double>& odd_coeffs() const { return c_; }
  double trust_radius() const { return trust_; }
  double f3() const { return 6.0 * c_[0]; }
  bool is_suppressed() const {
    return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
  }

  double eval(double u) const {
    check(u);
    return u * u * u * series(u * u, 0);
  }

  double deriv(double u, int order) const {
    check(u);
    const double z = u * u;
    switch (order) {
      case 0: return u * z * series(z, 0);
      case 1: return z * series(z, 1);
      case 2: {
        double s = 0.0;
        for (int m = int(c_.size()); m >= 1; --m) s = s * z + double(2 * m + 1) * (2 * m) * c_[m - 1];
        return u * s;
      }
      case 3: {
        double s = 0.0;
        for (int m = int(c_.size()); m >= 1; --m)
          s = s * z + double(2 * m + 1) * (2 * m) * (2 * m - 1) * c_[m - 1];
        return s;
      }
      default: throw DomainError("deriv supports order <= 3");
    }
  }

  // F(u) = int_0^u f.
  double antiderivative(double u) const {
    check(u);
    const double z = u * u;
    return z * z * series(z, 2);
  }

  // f(eps U)/eps^3, f'(eps U)/eps^2, F(eps U)/eps^4, finite as eps -> 0.
  double scaled_eval(double U, double eps) const {
    if (eps >= kEpsSwitch) {
      double u = eps * U;
      return u * u * u * series(u * u, 0) / (eps * eps * eps);
    }
    return U * U * U * series(eps * eps * U * U, 0);
  }
  double scaled_deriv(double U, double eps) const {
    if (eps >= kEpsSwitch) {
      double u = eps * U;
      return u * u * series(u * u, 1) / (eps * eps);
    }
    return U * U * series(eps * eps * U * U, 1);
  }
  double scaled_antiderivative(double U, double eps) const {
    if (eps >= kEpsSwitch) {
      double u = eps * U;
      return u * u * u * u * series(u * u, 2) / (eps * eps * eps * eps);
    }
    double z = U * U;
    return z * z * series(eps * eps * z, 2);
  }

  void check(double u) const {
    if (!(std::abs(u) <= trust_))
      throw DomainError("|u| = " + std::to_string(std::abs(u)) + " exceeds trust radius " + std::to_string(trust_) +
                        " of model " + name_);
  }

 private:
  AnalyticOddNonlinearity() = default;

  void validate() const {
    for (double v : c_)
      if (!std::isfinite(v)) throw DomainError("non-finite Taylor coefficient");
    if (!(trust_ > 0.0)) throw DomainError("trust radius must be positive");
  }

  // kind 0: sum c_{2m+1} z^{m-1}; kind 1: sum (2m+1) c_{2m+1} z^{m-1}; kind 2: sum c_{2m+1}/(2m+2) z^{m-1}.
  double series(double z, int kind) const {
    double s = 0.0;
    for (int m = int(c_.size()); m >= 1; --m) {
      double c = c_[m - 1];
      if (kind == 1) c *= double(2 * m + 1);
      if (kind == 2) c /= double(2 * m + 2);
      s = s * z + c;
    }
    return s;
  }

  // Largest r with the first omitted sine-series term (times a geometric tail factor) below 1e-12.
  static double sine_series_trust(int terms) {
    auto tail = [terms](double r) {
      int n = 2 * terms + 3;
      double t = 1.0;
      for (int i = 1; i <= n; ++i) t *= r / i;
      double q = r * r / (double(n + 1) * (n + 2));
      return q < 1.0 ? t / (1.0 - q) : std::numeric_limits<double>::infinity();
    };
    double lo = 0.0, hi = 50.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (tail(mid) <= 1e-12 ? lo : hi) = mid;
    }
    return lo;
  }

  std::string name_;
  std::vector<double> c_;
  double trust_ = 1.0;
};

struct RescaledNonlinearity {
  AnalyticOddNonlinearity model;
  double eps;

  RescaledNonlinearity(AnalyticOddNonlinearity m, double e) : model(std::move(m)), eps(e) {
    if (!(e > 0.0 && e < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  }
  double omega2() const { return 1.0 + eps * eps; }
};

namespace detail {
inline int x_grid_size(int band) { return std::max(64, 4 * band); }

inline std::vector<double> u_samples(double v, const SpatialField& w, int M) {
  std::vector<double> U(M);
  for (int l = 0; l < M; ++l) {
    double x = kTwoPi * l / M;
    U[l] = v * std::sin(x) + w.eval(x);
  }
  return U;
}

inline void check_trust(const std::vector<double>& U, const RescaledNonlinearity& rn) {
  double m = 0.0;
  for (double u : U) m = std::max(m, std::abs(u));
  if (rn.eps * m > rn.model.trust_radius())
    throw DomainError("eps*sup|U| = " + std::to_string(rn.eps * m) + " exceeds trust radius " +
                      std::to_string(rn.model.trust_radius()));
}
}  // namespace detail

// -(1/(eps^3 omega^2)) P f(eps v sin x + eps w)
inline double tilde_f(double v, const SpatialField& w, const RescaledNonlinearity& rn) {
  const int M = detail::x_grid_size(w.band());
  auto U = detail::u_samples(v, w, M);
  detail::check_trust(U, rn);
  std::vector<double> g(M);
  for (int l = 0; l < M; ++l) g[l] = rn.model.scaled_eval(U[l], rn.eps);
  return -project_P(g) / rn.omega2();
}

// -(1/(eps^3 omega^2)) Q f(eps v sin x + eps w), returned on band max(w.band, band).
inline SpatialField tilde_g(double v, const SpatialField& w, const RescaledNonlinearity& rn, int band = -1) {
  if (band < 0) band = std::max(w.band(), 3);
  const int M = detail::x_grid_size(std::max(band, w.band()));
  auto U = detail::u_samples(v, w, M);
  detail::check_trust(U, rn);
  std::vector<double> g(M);
  for (int l = 0; l < M; ++l) g[l] = -rn.model.scaled_eval(U[l], rn.eps) / rn.omega2();
  return project_Q(g, band);
}

// D_w tilde_g (v, w) h = Q[m h] with m = -f'(eps U)/(eps^2 omega^2).
inline SpatialField tilde_g_derivative(double v, const SpatialField& w, const SpatialField& h,
                                       const RescaledNonlinearity& rn, int band = -1) {
  if (band < 0) band = std::max(w.band(), h.band());
  const int M = detail::x_grid_size(std::max({band, w.band(), h.band()}));
  auto U = detail::u_samples(v, w, M);
  detail::check_trust(U, rn);
  std::vector<double> g(M);
  for (int l = 0; l < M; ++l) {
    double x = kTwoPi * l / M;
    g[l] = -rn.model.scaled_deriv(U[l], rn.eps) / rn.omega2() * h.eval(x);
  }
  return project_Q(g, band);
}

}  // namespace kgwave
