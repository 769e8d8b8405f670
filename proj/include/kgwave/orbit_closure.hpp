#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "detail/format.hpp"
#include "detail/ode.hpp"
#include "errors.hpp"
#include "fourier_space.hpp"
#include "galerkin_solver.hpp"
#include "nonlinearity.hpp"
#include "planar_limit.hpp"
#include "trajectory.hpp"

namespace kgwave {

// Copy of w restricted to the modes that carry weight above rel * max|coeff|.
inline SpaceTimeField trim_bands(const SpaceTimeField& w, double rel = 1e-17) {
  const auto& a = w.coeffs();
  if (a.size() == 0) return w;
  const double thr = rel * a.cwiseAbs().maxCoeff();
  int kx = 1, jt = 0;
  for (int kk = 0; kk < a.cols(); ++kk)
    for (int j = 0; j < a.rows(); ++j)
      if (std::abs(a(j, kk)) > thr) kx = std::max(kx, kk + 2), jt = std::max(jt, j);
  return w.resized(kx, jt);
}

namespace detail {

// V-equation (v, v1)' = (v1/omega, -v/omega + omega f~(v, w(tau))) with w a known driving field.
struct VFlow {
  const SpaceTimeField* w;  // nullptr: w = 0
  RescaledNonlinearity rn;
  double omega;
  void operator()(const ode_state<double, 2>& x, ode_state<double, 2>& d, double tau) const {
    double ft = tilde_f(x[0], w ? w->slice(tau) : SpatialField(1), rn);
    d[0] = x[1] / omega;
    d[1] = -x[0] / omega + omega * ft;
  }
};

}  // namespace detail

// Time-p map of the V-equation; PlanarState carries (v, v1) with v1 = omega v_tau.
inline PlanarState time_p_map(PlanarState V0, const SpaceTimeField* w, double period, double eps,
                              const AnalyticOddNonlinearity& model, double tol = 1e-13) {
  if (!(period > 0.0)) throw DomainError("period must be positive");
  if (w && std::abs(w->period() - period) > 1e-12 * period) throw ShapeError("w period differs from map period");
  SpaceTimeField wt = w ? trim_bands(*w) : SpaceTimeField(period, 1, 0);
  detail::VFlow flow{w ? &wt : nullptr, RescaledNonlinearity(model, eps), std::sqrt(1.0 + eps * eps)};
  detail::ode_state<double, 2> x{V0.p, V0.p_tau};
  detail::integrate_adaptive<double, 2>(flow, x, 0.0, period, tol);
  return {x[0], x[1]};
}

// H = v_tau^2/2 + v^2/(2 omega^2) + sum_k [w_tau,k^2/2 + (k^2 - 1/omega^2) w_k^2/(2 eps^2)]
//     + (1/pi) int F(eps U) dx / (eps^4 omega^2),  U = v sin x + w.
inline double hamiltonian_H(double v, double v_tau, const SpatialField& w, const SpatialField& w_tau, double eps,
                            const AnalyticOddNonlinearity& model) {
  const double om2 = 1.0 + eps * eps;
  double h = 0.5 * v_tau * v_tau + 0.5 * v * v / om2;
  for (int k = 2; k <= w_tau.band(); ++k) h += 0.5 * w_tau(k) * w_tau(k);
  for (int k = 2; k <= w.band(); ++k) h += (double(k) * k - 1.0 / om2) * w(k) * w(k) / (2.0 * eps * eps);
  const int M = detail::x_grid_size(w.band());
  double acc = 0.0;
  for (int l = 0; l < M; ++l) {
    double x = kTwoPi * l / M, U = v * std::sin(x) + w.eval(x);
    if (eps * std::abs(U) > model.trust_radius()) throw DomainError("trust radius exceeded in Hamiltonian");
    acc += model.scaled_antiderivative(U, eps);
  }
  return h + 2.0 * acc / (M * om2);
}

inline double hamiltonian_H(PlanarState V, double tau, const SpaceTimeField* w, double eps,
                            const AnalyticOddNonlinearity& model) {
  const double om = std::sqrt(1.0 + eps * eps);
  SpatialField ws = w ? w->slice(tau) : SpatialField(1), wts = w ? w->slice(tau, 1) : SpatialField(1);
  return hamiltonian_H(V.p, V.p_tau / om, ws, wts, eps, model);
}

struct ClosureOptions {
  int n_samples = 512;
  double ode_tol = 1e-13;
  double defect_tol = 1e-10;
  double H_tol = 1e-8;
  double change_tol = 1e-11;
  int max_outer = 25;
  int max_secant = 40;
  double fd_step = 1e-6;
  double nd_threshold = 1e-6;  // |dT/d delta1| relative to |v_perp|
};

struct ClosureResult {
  double eps = 0.0;
  double period = 0.0;
  double delta1 = 0.0;
  PlanarState base;              // P0 = (a, 0)
  PlanarState v_dir{0.0, 1.0};   // orbit tangent at P0 (unit)
  PlanarState v_perp;            // gradient of H_star at P0
  PlanarState start, end;        // (v, v1) at tau = 0 and tau = p
  Trajectory V;
  SpaceTimeField w;
  SolverRun run;
  double scalar_defect = 0.0;    // P_v(V(p) - P0)
  double d = 0.0;
  double H_start = 0.0, H_end = 0.0, H_mismatch = 0.0, H_drift = 0.0;
  double nd_derivative = 0.0;    // finite-difference dT/d delta1
  double nd_predicted = 0.0;     // the same from the limit monodromy
  int outer_iters = 0;
  std::vector<double> defect_history;
  std::vector<double> delta_history;
  bool closed = false;
  bool consistent = true;
};

namespace detail {

inline std::vector<PlanarState> sample_V(PlanarState start, const SpaceTimeField* w, double period, double eps,
                                         const AnalyticOddNonlinearity& model, int n, double tol) {
  SpaceTimeField wt = w ? trim_bands(*w) : SpaceTimeField(period, 1, 0);
  VFlow flow{w ? &wt : nullptr, RescaledNonlinearity(model, eps), std::sqrt(1.0 + eps * eps)};
  std::vector<double> times(n + 1);
  for (int i = 0; i <= n; ++i) times[i] = period * i / n;
  auto st = integrate_at<double, 2>(flow, {start.p, start.p_tau}, times, tol);
  std::vector<PlanarState> out;
  for (auto& s : st) out.push_back({s[0], s[1]});
  return out;
}

}  // namespace detail

// Recomputes d, the H mismatch between the endpoints and the closure verdict from start, end, w.
inline bool check_closure(ClosureResult& r, const AnalyticOddNonlinearity& model, double tol = 1e-8,
                          double H_tol = 1e-8) {
  const double vp2 = r.v_perp.p * r.v_perp.p + r.v_perp.p_tau * r.v_perp.p_tau;
  const double dv = r.end.p - r.base.p, dv1 = r.end.p_tau - r.base.p_tau;
  r.scalar_defect = dv * r.v_dir.p + dv1 * r.v_dir.p_tau;
  r.d = (dv * r.v_perp.p + dv1 * r.v_perp.p_tau) / vp2 - r.delta1;
  const SpaceTimeField* w = r.w.nx() >= 2 ? &r.w : nullptr;
  r.H_start = hamiltonian_H(r.start, 0.0, w, r.eps, model);
  r.H_end = hamiltonian_H(r.end, r.period, w, r.eps, model);
  r.H_mismatch = std::abs(r.H_end - r.H_start);
  bool d_ok = std::abs(r.d) <= tol && std::abs(r.scalar_defect) <= tol;
  bool h_ok = r.H_mismatch <= H_tol;
  // a v_perp displacement d moves H by about d |v_perp|^2; half of that is a safe lower bound
  bool jump_missing = !d_ok && std::abs(r.d) > tol && r.H_mismatch < 0.5 * std::abs(r.d) * vp2;
  bool jump_unexplained = d_ok && r.H_mismatch > 2.0 * tol * vp2 + H_tol;
  r.consistent = !jump_missing && !jump_unexplained;
  r.closed = d_ok && h_ok;
  return r.closed;
}

// Shooting in delta1 along v_perp, alternated with w-solves on the resulting trajectory.
inline ClosureResult solve_delta1(const PlanarOrbit& orbit, double eps, const AnalyticOddNonlinearity& model,
                                  const SolverConfig& solver, ClosureOptions opt = {}, bool w_forced_zero = false) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  ClosureResult r;
  r.eps = eps;
  r.period = orbit.period;
  r.base = orbit.base_point;
  r.v_perp = orbit.conormal;
  const double vp2 = r.v_perp.p * r.v_perp.p;
  const double p = orbit.period;

  MonodromyReport mono = monodromy(orbit, orbit.f3);
  r.nd_predicted = mono.M(1, 0) * r.v_perp.p;

  SpaceTimeField w(p, 1, 0);
  bool have_w = false;
  auto defect = [&](double d1) {
    PlanarState s{r.base.p + d1 * r.v_perp.p, 0.0};
    PlanarState e = time_p_map(s, have_w ? &w : nullptr, p, eps, model, opt.ode_tol);
    return e.p_tau - r.base.p_tau;
  };

  double delta = 0.0, slope = 0.0;
  Trajectory Vprev;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    r.outer_iters = outer + 1;
    if (outer == 0) {
      const double h = opt.fd_step;
      slope = (defect(h) - defect(-h)) / (2.0 * h);
      r.nd_derivative = slope;
      if (!(std::abs(slope) >= opt.nd_threshold * std::sqrt(vp2)))
        throw DegeneracyError("shooting derivative " + detail::shortest(slope) + " vanishes: orbit degenerate");
    }
    // secant on delta1, seeded by the stored slope
    double d0 = delta, T0 = defect(d0);
    r.defect_history.push_back(std::abs(T0));
    for (int it = 0; it < opt.max_secant && std::abs(T0) > opt.defect_tol; ++it) {
      double d1 = d0 - T0 / slope, T1 = defect(d1);
      r.defect_history.push_back(std::abs(T1));
      if (T1 != T0 && d1 != d0) slope = (T1 - T0) / (d1 - d0);
      d0 = d1, T0 = T1;
      if (it + 1 == opt.max_secant && std::abs(T0) > opt.defect_tol)
        throw SolverDivergence("delta1 secant did not converge (defect " + detail::shortest(std::abs(T0)) + ")",
                               {});
    }
    double change = std::abs(d0 - delta);
    delta = d0;
    r.delta_history.push_back(delta);

    PlanarState start{r.base.p + delta * r.v_perp.p, 0.0};
    auto samples = detail::sample_V(start, have_w ? &w : nullptr, p, eps, model, opt.n_samples, opt.ode_tol);
    std::vector<double> v;
    for (int i = 0; i < opt.n_samples; ++i) v.push_back(samples[i].p);
    Trajectory V = Trajectory::from_samples(p, v);
    if (outer > 0) {
      int n = int(std::max(V.coeffs().size(), Vprev.coeffs().size()));
      Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b = Eigen::VectorXd::Zero(n);
      a.head(V.coeffs().size()) = V.coeffs();
      b.head(Vprev.coeffs().size()) = Vprev.coeffs();
      change = std::max(change, (a - b).cwiseAbs().maxCoeff());
    }
    r.V = V;
    if (w_forced_zero) break;
    if (outer > 0 && change <= opt.change_tol) break;
    if (outer + 1 == opt.max_outer)
      throw SolverDivergence("outer V/w loop did not settle (change " + detail::shortest(change) + ")", r.run.stages);
    r.run = nash_moser_solve(V, eps, solver, model);
    if (!r.run.converged)
      throw SolverDivergence("w-solve did not converge inside the closure loop", r.run.stages);
    w = r.run.w;
    have_w = true;
    Vprev = V;
  }

  r.delta1 = delta;
  r.w = have_w ? w : SpaceTimeField(p, 1, 0);
  r.start = {r.base.p + delta * r.v_perp.p, 0.0};
  auto samples = detail::sample_V(r.start, have_w ? &r.w : nullptr, p, eps, model, opt.n_samples, opt.ode_tol);
  r.end = samples.back();
  double hmin = 1e300, hmax = -1e300;
  for (int i = 0; i <= opt.n_samples; ++i) {
    double h = hamiltonian_H(samples[i], p * i / opt.n_samples, have_w ? &r.w : nullptr, eps, model);
    hmin = std::min(hmin, h), hmax = std::max(hmax, h);
  }
  r.H_drift = hmax - hmin;
  check_closure(r, model, opt.defect_tol, opt.H_tol);
  return r;
}

inline nlohmann::json to_json(const ClosureResult& r) {
  return {{"eps", r.eps},
          {"delta1", r.delta1},
          {"d", r.d},
          {"scalar_defect", r.scalar_defect},
          {"H_drift", r.H_drift},
          {"H_mismatch", r.H_mismatch},
          {"outer_iters", r.outer_iters},
          {"closed", r.closed},
          {"consistent", r.consistent},
          {"nd_derivative", r.nd_derivative},
          {"nd_predicted", r.nd_predicted},
          {"start", {r.start.p, r.start.p_tau}},
          {"end", {r.end.p, r.end.p_tau}},
          {"trajectory_cos_coeffs", std::vector<double>(r.V.coeffs().data(), r.V.coeffs().data() + r.V.coeffs().size())}};
}

}  // namespace kgwave
