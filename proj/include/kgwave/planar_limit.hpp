#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <json.hpp>

#include "detail/ode.hpp"
#include "errors.hpp"
#include "trajectory.hpp"

namespace kgwave {

struct PlanarState {
  double p = 0.0;
  double p_tau = 0.0;
};

inline PlanarState limit_rhs(PlanarState s, double f3) { return {s.p_tau, -s.p - f3 / 8.0 * s.p * s.p * s.p}; }

inline double h_star(PlanarState s, double f3) {
  return 0.5 * s.p_tau * s.p_tau + 0.5 * s.p * s.p + f3 / 32.0 * s.p * s.p * s.p * s.p;
}

struct OrbitOptions {
  double tol = 1e-13;
  int n_samples = 512;
  double max_period = 1e3;
};

struct PlanarOrbit {
  double f3 = 0.0;
  double period = 0.0;
  double energy = 0.0;
  double amplitude = 0.0;
  std::vector<PlanarState> samples;  // at tau_i = period * i / n
  PlanarState base_point, tangent, conormal;

  double tau(int i) const { return period * i / double(samples.size()); }

  Trajectory trajectory() const {
    std::vector<double> v;
    v.reserve(samples.size());
    for (auto& s : samples) v.push_back(s.p);
    return Trajectory::from_samples(period, v);
  }
};

struct MonodromyReport {
  Eigen::Matrix2d M = Eigen::Matrix2d::Identity();
  std::array<std::complex<double>, 2> eigenvalues{};
  Eigen::Vector2d singular_values_M_minus_I = Eigen::Vector2d::Zero();
  int rank_M_minus_I = 0;
  int rank_deficiency_of_M_minus_I = 2;
  double det = 1.0;
  double period = 0.0;
  bool nondegenerate = false;
};

namespace detail {

template <class Real>
struct LimitFlow {
  Real beta;  // f3 / 8
  void operator()(const ode_state<Real, 2>& x, ode_state<Real, 2>& d, Real) const {
    d[0] = x[1];
    d[1] = -x[0] - beta * x[0] * x[0] * x[0];
  }
};

// First return to {p_tau = 0, p > 0} from (a, 0), refined by a Henon step in p_tau as independent variable.
template <class Real>
Real return_time(Real a, Real beta, Real tol, double max_period) {
  namespace od = boost::numeric::odeint;
  using S = ode_state<Real, 2>;
  LimitFlow<Real> flow{beta};
  auto stepper = make_stepper<Real, 2>(tol);
  S x{a, Real(0)};
  Real t = 0, dt = Real(1) / Real(64);
  for (long steps = 0;; ++steps) {
    S prev = x;
    Real tprev = t;
    int fails = 0;
    while (stepper.try_step(flow, x, t, dt) == od::fail)
      if (++fails > 500) throw IntegratorError("step size control failed in period detection");
    if (!boost::math::isfinite(x[0]) || !boost::math::isfinite(x[1]))
      throw IntegratorError("non-finite state in period detection");
    if (prev[1] > 0 && x[1] <= 0 && x[0] > 0) {
      // dp/ds = s / F(p), dt/ds = 1 / F(p) with s = p_tau and F(p) = dp_tau/dtau.
      auto henon = [beta](const S& y, S& d, Real s) {
        Real F = -y[0] - beta * y[0] * y[0] * y[0];
        d[0] = s / F;
        d[1] = Real(1) / F;
      };
      S y{prev[0], tprev};
      integrate_adaptive<Real, 2>(henon, y, prev[1], Real(0), tol);
      return y[1];
    }
    if (double(t) > max_period || steps > 50000000)
      throw NoPeriodicOrbitError("no return to the section within the period bound");
  }
}

}  // namespace detail

inline PlanarOrbit find_orbit(double f3, double a, OrbitOptions opt = {}) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("amplitude must be positive");
  if (!std::isfinite(f3)) throw DomainError("f3 must be finite");
  if (f3 < 0.0 && a * a >= -8.0 / f3)
    throw NoPeriodicOrbitError("amplitude " + std::to_string(a) + " lies outside the bounded well |p| < " +
                               std::to_string(std::sqrt(-8.0 / f3)));
  if (opt.n_samples < 8) throw DomainError("need at least 8 orbit samples");
  const double beta = f3 / 8.0;
  PlanarOrbit o;
  o.f3 = f3;
  o.amplitude = a;
  o.period = detail::return_time<double>(a, beta, opt.tol, opt.max_period);
  o.base_point = {a, 0.0};
  o.energy = h_star(o.base_point, f3);
  o.tangent = limit_rhs(o.base_point, f3);
  o.conormal = {a + beta * a * a * a, 0.0};

  std::vector<double> times(opt.n_samples);
  for (int i = 0; i < opt.n_samples; ++i) times[i] = o.period * i / opt.n_samples;
  auto states = detail::integrate_at<double, 2>(detail::LimitFlow<double>{beta}, {a, 0.0}, times, opt.tol);
  o.samples.reserve(states.size());
  for (auto& s : states) o.samples.push_back({s[0], s[1]});
  return o;
}

// Variational flow over one period in quad precision; the (1,1) Jordan pair splits like sqrt(error) otherwise.
inline MonodromyReport monodromy(const PlanarOrbit& orbit, double f3, double eig_tol = 1e-8, double rank_tol = 1e-8) {
  using Q = detail::quad;
  using S6 = detail::ode_state<Q, 6>;
  const Q beta = Q(f3) / 8;
  const Q a = Q(orbit.base_point.p);
  if (orbit.base_point.p_tau != 0.0 || !(orbit.base_point.p > 0)) throw DomainError("orbit base point must be (a, 0)");
  const Q tol = Q(1e-26);
  const Q T = detail::return_time<Q>(a, beta, tol, orbit.period * 4 + 10);
  auto var = [beta](const S6& x, S6& d, Q) {
    Q k = -1 - 3 * beta * x[0] * x[0];
    d[0] = x[1];
    d[1] = -x[0] - beta * x[0] * x[0] * x[0];
    d[2] = x[4];  // M = [[x2, x3], [x4, x5]]
    d[3] = x[5];
    d[4] = k * x[2];
    d[5] = k * x[3];
  };
  S6 x{a, Q(0), Q(1), Q(0), Q(0), Q(1)};
  detail::integrate_adaptive<Q, 6>(var, x, Q(0), T, tol);

  MonodromyReport r;
  r.period = double(T);
  r.M << double(x[2]), double(x[3]), double(x[4]), double(x[5]);
  Q tr = x[2] + x[5], det = x[2] * x[5] - x[3] * x[4];
  r.det = double(det);
  Q disc = tr * tr / 4 - det;
  if (disc >= 0) {
    Q s = sqrt(disc);
    r.eigenvalues = {std::complex<double>(double(tr / 2 + s), 0.0), std::complex<double>(double(tr / 2 - s), 0.0)};
  } else {
    Q s = sqrt(-disc);
    r.eigenvalues = {std::complex<double>(double(tr / 2), double(s)), std::complex<double>(double(tr / 2), -double(s))};
  }
  Eigen::Matrix2d D;
  D << double(x[2] - 1), double(x[3]), double(x[4]), double(x[5] - 1);
  r.singular_values_M_minus_I = Eigen::JacobiSVD<Eigen::Matrix2d>(D).singularValues();
  r.rank_M_minus_I = int(r.singular_values_M_minus_I[0] > rank_tol) + int(r.singular_values_M_minus_I[1] > rank_tol);
  r.rank_deficiency_of_M_minus_I = 2 - r.rank_M_minus_I;
  bool ones = std::abs(r.eigenvalues[0] - 1.0) <= eig_tol && std::abs(r.eigenvalues[1] - 1.0) <= eig_tol;
  r.nondegenerate = ones && r.rank_M_minus_I == 1;
  return r;
}

inline nlohmann::json to_json(const PlanarOrbit& o) {
  nlohmann::json s = nlohmann::json::array();
  for (std::size_t i = 0; i < o.samples.size(); ++i) s.push_back({o.tau(int(i)), o.samples[i].p, o.samples[i].p_tau});
  return {{"period", o.period}, {"amplitude", o.amplitude}, {"energy", o.energy}, {"samples", s}};
}

inline nlohmann::json to_json(const MonodromyReport& m) {
  return {{"matrix", {{m.M(0, 0), m.M(0, 1)}, {m.M(1, 0), m.M(1, 1)}}},
          {"eigenvalues",
           {{m.eigenvalues[0].real(), m.eigenvalues[0].imag()}, {m.eigenvalues[1].real(), m.eigenvalues[1].imag()}}},
          {"singular_values_M_minus_I", {m.singular_values_M_minus_I[0], m.singular_values_M_minus_I[1]}},
          {"rank_M_minus_I", m.rank_M_minus_I},
          {"rank_deficiency_of_M_minus_I", m.rank_deficiency_of_M_minus_I},
          {"det", m.det},
          {"nondegenerate", m.nondegenerate}};
}

}  // namespace kgwave
