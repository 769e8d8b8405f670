#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "detail/format.hpp"
#include "detail/parallel.hpp"
#include "errors.hpp"
#include "fourier_space.hpp"
#include "nonlinearity.hpp"
#include "trajectory.hpp"

namespace kgwave {

struct ResonanceParams {
  double alpha = 0.25;
  double l = 2.5;
  double gamma() const { return l - alpha - 2.0; }
  void validate() const {
    if (!(2.0 <= 2.0 + alpha && 2.0 + alpha < l && l < 3.0))
      throw DomainError("resonance params need 2 <= 2 + alpha < l < 3");
    double g = gamma();
    if (!(g > 0.0 && g < 1.0)) throw DomainError("gamma = l - alpha - 2 must lie in (0, 1)");
  }
  double half_width(int k, int j) const { return std::pow(double(k), alpha) / std::pow(double(j), l); }
};

// Uniform samples over one period, tau_i = period * i / n.
struct SampledPeriodic {
  double period = kTwoPi;
  Eigen::VectorXd values;
};

struct HillSpectrum {
  double period = kTwoPi;
  SampledPeriodic potential;
  int j_max = 0;
  Eigen::VectorXd eigenvalues;   // ascending, index j = 0..j_max
  Eigen::MatrixXd eigenvectors;  // columns in the orthonormal cosine basis (empty unless requested)
  bool flat = false;             // constant potential, eigenvalues in closed form
  double lambda(int j) const { return eigenvalues[j]; }
};

// x-average of the multiplier of D_w g~, sampled on n tau points.
inline SampledPeriodic averaged_potential(const Trajectory& V, const SpaceTimeField* w, double eps,
                                          const AnalyticOddNonlinearity& model, int n = -1) {
  RescaledNonlinearity rn(model, eps);
  if (w && std::abs(w->period() - V.period()) > 1e-12 * V.period()) throw ShapeError("period mismatch");
  if (n < 0) n = std::max(256, 4 * std::max(V.band(), w ? w->nt() : 0));
  const int mx = std::max(64, 4 * (w ? w->nx() : 1));
  SampledPeriodic q{V.period(), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) {
    double tau = V.period() * i / n;
    double v = V.value(tau);
    SpatialField ws = w ? w->slice(tau) : SpatialField(1);
    double acc = 0.0;
    for (int l = 0; l < mx; ++l) {
      double x = kTwoPi * l / mx;
      double U = v * std::sin(x) + ws.eval(x);
      if (eps * std::abs(U) > model.trust_radius()) throw DomainError("trust radius exceeded in averaged potential");
      acc += -model.scaled_deriv(U, eps) / rn.omega2();
    }
    q.values[i] = acc / mx;
  }
  return q;
}

inline HillSpectrum flat_spectrum(double period, double shift, int j_max) {
  HillSpectrum h;
  h.period = period;
  h.potential = {period, Eigen::VectorXd::Constant(8, shift)};
  h.j_max = j_max;
  h.flat = true;
  h.eigenvalues.resize(j_max + 1);
  const double w = kTwoPi / period;
  for (int j = 0; j <= j_max; ++j) h.eigenvalues[j] = (w * j) * (w * j) + shift;
  return h;
}

// Eigenpairs of -d^2/dtau^2 + q on even period-periodic functions by cosine Galerkin of size j_max+1.
inline HillSpectrum hill_eigs(const SampledPeriodic& q, int j_max, bool want_vectors = false,
                              int dense_limit = 4000) {
  if (j_max < 0) throw DomainError("j_max must be >= 0");
  const int n = int(q.values.size());
  if (n < 4) throw AliasingError("potential needs at least 4 samples");
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(q.values[i])) throw DomainError("potential must be real and finite");
  const double p = q.period;
  const int mmax = std::min(2 * j_max, n / 2 - 1);
  Eigen::VectorXd qh = Eigen::VectorXd::Zero(2 * j_max + 1);
  for (int m = 0; m <= mmax; ++m) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += q.values[i] * std::cos(kTwoPi * double((long(i) * m) % n) / n);
    qh[m] = s * (m == 0 ? 1.0 : 2.0) / n;
  }
  double var = qh.tail(qh.size() - 1).cwiseAbs().maxCoeff();
  if (var <= 1e-15 * (1.0 + std::abs(qh[0]))) {
    HillSpectrum h = flat_spectrum(p, qh[0], j_max);
    h.potential = q;
    if (want_vectors) h.eigenvectors = Eigen::MatrixXd::Identity(j_max + 1, j_max + 1);
    return h;
  }
  if (j_max + 1 > dense_limit)
    throw DomainError("dense Hill problem of size " + std::to_string(j_max + 1) + " exceeds limit " +
                      std::to_string(dense_limit));

  const double w = kTwoPi / p;
  auto I = [&](int m) { return m == 0 ? p * qh[0] : 0.5 * p * qh[m]; };
  auto nrm = [&](int j) { return j == 0 ? 1.0 / std::sqrt(p) : std::sqrt(2.0 / p); };
  Eigen::MatrixXd H(j_max + 1, j_max + 1);
  for (int j = 0; j <= j_max; ++j)
    for (int jp = 0; jp <= j_max; ++jp)
      H(j, jp) = nrm(j) * nrm(jp) * 0.5 * (I(std::abs(j - jp)) + I(j + jp)) + (j == jp ? (w * j) * (w * j) : 0.0);
  if ((H - H.transpose()).cwiseAbs().maxCoeff() != 0.0) throw InternalError("Hill matrix assembly is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, want_vectors ? Eigen::ComputeEigenvectors
                                                                    : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw InternalError("Hill eigensolver failed");
  HillSpectrum h;
  h.period = p;
  h.potential = q;
  h.j_max = j_max;
  h.eigenvalues = es.eigenvalues();
  if (want_vectors) h.eigenvectors = es.eigenvectors();
  for (int j = 0; j < j_max; ++j)
    if (!(h.eigenvalues[j + 1] - h.eigenvalues[j] > 0.0))
      throw InternalError("Hill eigenvalues not simple at j=" + std::to_string(j));
  return h;
}

inline double small_divisor(int k, double eps, double lambda) {
  return -double(k) * k + 1.0 / (1.0 + eps * eps) + eps * eps * lambda;
}

// Unique positive root of -k^2 + 1/(1+eps^2) + eps^2 lambda = 0 (bisection in x = eps^2, then Newton).
inline std::optional<double> epsilon_root(int k, double lambda) {
  if (k < 2) throw DomainError("k must be >= 2");
  if (!(lambda > 0.0)) return std::nullopt;
  const double k2 = double(k) * k;
  auto phi = [&](double x) { return -k2 + 1.0 / (1.0 + x) + x * lambda; };
  auto dphi = [&](double x) { return -1.0 / ((1.0 + x) * (1.0 + x)) + lambda; };
  double lo = 0.0, hi = k2 / lambda;
  for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (phi(mid) < 0.0 ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    double d = dphi(x);
    if (d == 0.0) break;
    double xn = x - phi(x) / d;
    if (!(xn > 0.0)) break;
    x = xn;
  }
  return std::sqrt(x);
}

inline std::optional<double> epsilon_kj(int k, int j, const HillSpectrum& spec) {
  if (j < 0 || j > spec.j_max) throw CoverageError("j=" + std::to_string(j) + " outside spectrum range");
  return epsilon_root(k, spec.lambda(j));
}

class DivisorTable {
 public:
  DivisorTable(const HillSpectrum& spec, int k_max) : k_max_(k_max), j_max_(spec.j_max), period_(spec.period) {
    if (k_max < 1) throw DomainError("k_max must be >= 1");
    eps_.assign(std::max(k_max - 1, 0), std::vector<double>(j_max_ + 1, kNone));
    lambda_ = spec.eigenvalues;
    detail::parallel_for(std::max(k_max - 1, 0), [&](int i) {
      for (int j = 0; j <= j_max_; ++j) {
        auto e = epsilon_root(i + 2, spec.lambda(j));
        if (e) eps_[i][j] = *e;
      }
    });
  }

  int k_max() const { return k_max_; }
  int j_max() const { return j_max_; }
  double period() const { return period_; }
  double lambda(int j) const { return lambda_[j]; }
  std::optional<double> operator()(int k, int j) const {
    if (k < 2 || k > k_max_ || j < 0 || j > j_max_) throw CoverageError("(k, j) outside table");
    double e = eps_[k - 2][j];
    return std::isnan(e) ? std::nullopt : std::optional<double>(e);
  }

  // Largest |defining-equation residual| over all entries.
  double max_residual() const {
    double m = 0.0;
    for (int k = 2; k <= k_max_; ++k)
      for (int j = 0; j <= j_max_; ++j)
        if (auto e = (*this)(k, j)) m = std::max(m, std::abs(small_divisor(k, *e, lambda_[j])));
    return m;
  }

  void write_csv(std::ostream& os, const ResonanceParams& rp, int k_lo = 2) const {
    os << "k,j,eps_kj,window_lo,window_hi\n";
    for (int k = std::max(k_lo, 2); k <= k_max_; ++k)
      for (int j = 1; j <= j_max_; ++j)
        if (auto e = (*this)(k, j)) {
          double hw = rp.half_width(k, j);
          os << k << ',' << j << ',' << detail::shortest(*e) << ',' << detail::shortest(*e - hw) << ','
             << detail::shortest(*e + hw) << '\n';
        }
  }

 private:
  static constexpr double kNone = std::numeric_limits<double>::quiet_NaN();
  int k_max_, j_max_;
  double period_;
  Eigen::VectorXd lambda_;
  std::vector<std::vector<double>> eps_;
};

struct ResonanceReport {
  bool resonant = false;
  int k = 0;
  int j = 0;
  double center = std::numeric_limits<double>::quiet_NaN();
  double half_width = 0.0;
  double distance = std::numeric_limits<double>::infinity();  // |eps - center|
  double margin = std::numeric_limits<double>::infinity();    // distance - half_width (negative inside)
  std::string describe() const {
    return std::string(resonant ? "inside" : "nearest") + " window (k=" + std::to_string(k) +
           ", j=" + std::to_string(j) + ") center " + detail::shortest(center) + " half-width " +
           detail::shortest(half_width) + " distance " + detail::shortest(distance);
  }
};

// Window membership over k in [k_lo, k_hi] and j >= 1; nearest window by margin.
inline ResonanceReport is_resonant(double eps, const ResonanceParams& rp, const DivisorTable& t, int k_lo, int k_hi) {
  rp.validate();
  if (k_lo < 2) throw DomainError("resonance check starts at k = 2");
  if (k_hi > t.k_max()) throw CoverageError("table covers k <= " + std::to_string(t.k_max()) + ", requested " +
                                            std::to_string(k_hi));
  ResonanceReport best;
  for (int k = k_lo; k <= k_hi; ++k) {
    auto last = t(k, t.j_max());
    if (!last || *last + rp.half_width(k, t.j_max()) >= eps)
      throw CoverageError("divisor table too short near eps=" + detail::shortest(eps) + " for k=" +
                          std::to_string(k) + " (j_max=" + std::to_string(t.j_max()) + ")");
    for (int j = 1; j <= t.j_max(); ++j) {
      auto e = t(k, j);
      if (!e) continue;
      double hw = rp.half_width(k, j), dist = std::abs(eps - *e), margin = dist - hw;
      bool inside = margin < 0.0;
      if ((inside && !best.resonant) || (inside == best.resonant && margin < best.margin)) {
        best = {inside, k, j, *e, hw, dist, margin};
      }
    }
  }
  return best;
}

struct DivisorMin {
  double m = 0.0;
  int j_min = 0;
};

inline DivisorMin divisor_min(double eps, int k, const HillSpectrum& spec) {
  DivisorMin r{std::numeric_limits<double>::infinity(), -1};
  for (int j = 1; j <= spec.j_max; ++j) {
    double d = std::abs(small_divisor(k, eps, spec.lambda(j)));
    if (d < r.m) r = {d, j};
  }
  if (r.j_min < 0 || r.j_min == spec.j_max || small_divisor(k, eps, spec.lambda(spec.j_max)) <= 0.0)
    throw CoverageError("spectrum too short to bracket the minimal divisor for k=" + std::to_string(k));
  return r;
}

// Measure of the union of windows inside (0, eps0), plus an analytic bound for j beyond the table.
inline double window_union_measure(const DivisorTable& t, const ResonanceParams& rp, double eps0, int k_lo, int k_hi,
                                   bool include_tail = true) {
  std::vector<std::pair<double, double>> iv;
  double tail = 0.0;
  for (int k = k_lo; k <= k_hi; ++k) {
    for (int j = 1; j <= t.j_max(); ++j) {
      auto e = t(k, j);
      if (!e) continue;
      double hw = rp.half_width(k, j), lo = std::max(*e - hw, 0.0), hi = std::min(*e + hw, eps0);
      if (hi > lo) iv.emplace_back(lo, hi);
    }
    if (include_tail)
      tail += 2.0 * std::pow(double(k), rp.alpha) * std::pow(t.j_max() + 0.5, 1.0 - rp.l) / (rp.l - 1.0);
  }
  std::sort(iv.begin(), iv.end());
  double total = 0.0, clo = -1.0, chi = -1.0;
  for (auto [lo, hi] : iv) {
    if (lo > chi) {
      if (chi > clo) total += chi - clo;
      clo = lo, chi = hi;
    } else {
      chi = std::max(chi, hi);
    }
  }
  if (chi > clo) total += chi - clo;
  return total + tail;
}

// Plain sum of window lengths over windows meeting (0, eps0).
inline double window_length_sum(const DivisorTable& t, const ResonanceParams& rp, double eps0, int k_lo, int k_hi) {
  double s = 0.0;
  for (int k = k_lo; k <= k_hi; ++k)
    for (int j = 1; j <= t.j_max(); ++j)
      if (auto e = t(k, j); e && *e - rp.half_width(k, j) < eps0) s += 2.0 * rp.half_width(k, j);
  return s;
}

}  // namespace kgwave
