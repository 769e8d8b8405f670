#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "fourier_space.hpp"

namespace kgwave {

// Even p-periodic scalar trajectory v(tau) = sum_j c_j cos(2 pi j tau / p).
class Trajectory {
 public:
  Trajectory() : Trajectory(kTwoPi, Eigen::VectorXd::Zero(1)) {}
  Trajectory(double period, Eigen::VectorXd coeffs) : period_(period), c_(std::move(coeffs)) {
    if (!(period > 0.0)) throw DomainError("trajectory period must be positive");
    if (c_.size() == 0) c_ = Eigen::VectorXd::Zero(1);
  }

  // Samples v(p i / n), i < n. Odd parts (from integration noise) are discarded.
  static Trajectory from_samples(double period, const std::vector<double>& v, double trim = 1e-15) {
    const int n = int(v.size());
    if (n < 4) throw AliasingError("trajectory needs at least 4 samples");
    const int nmax = n / 2 - 1;
    Eigen::VectorXd c(nmax + 1);
    for (int j = 0; j <= nmax; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += v[i] * std::cos(kTwoPi * double((long(i) * j) % n) / n);
      c[j] = s * (j == 0 ? 1.0 : 2.0) / n;
    }
    double mx = c.cwiseAbs().maxCoeff();
    int last = nmax;
    while (last > 0 && std::abs(c[last]) <= trim * mx) --last;
    return Trajectory(period, c.head(last + 1));
  }

  double period() const { return period_; }
  const Eigen::VectorXd& coeffs() const { return c_; }
  int band() const { return int(c_.size()) - 1; }

  double value(double tau, int derivs = 0) const {
    const double w = kTwoPi / period_;
    double s = 0.0;
    for (int j = 0; j < c_.size(); ++j) {
      double ph = w * j * tau;
      switch (derivs) {
        case 0: s += c_[j] * std::cos(ph); break;
        case 1: s -= c_[j] * w * j * std::sin(ph); break;
        case 2: s -= c_[j] * (w * j) * (w * j) * std::cos(ph); break;
        default: throw DomainError("trajectory supports up to two derivatives");
      }
    }
    return s;
  }

  double sup_bound() const { return c_.cwiseAbs().sum(); }

 private:
  double period_;
  Eigen::VectorXd c_;
};

}  // namespace kgwave
