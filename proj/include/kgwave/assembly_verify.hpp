#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "detail/fit.hpp"
#include "detail/format.hpp"
#include "detail/parallel.hpp"
#include "errors.hpp"
#include "fourier_space.hpp"
#include "galerkin_solver.hpp"
#include "nonlinearity.hpp"
#include "orbit_closure.hpp"
#include "planar_limit.hpp"
#include "trajectory.hpp"

namespace kgwave {

struct AssemblyError : Error { using Error::Error; };

// u(x, t) = eps [v(eps omega x) sin(omega t) + w(eps omega x, omega t)].
class AssembledSolution {
 public:
  AssembledSolution(double eps, Trajectory V, SpaceTimeField w)
      : eps_(eps), omega_(std::sqrt(1.0 + eps * eps)), V_(std::move(V)), w_(std::move(w)) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
    if (std::abs(w_.period() - V_.period()) > 1e-12 * V_.period()) throw ShapeError("w and V periods differ");
  }

  double eps() const { return eps_; }
  double omega() const { return omega_; }
  double t_period() const { return kTwoPi / omega_; }
  double x_period() const { return V_.period() / (eps_ * omega_); }
  const Trajectory& V() const { return V_; }
  const SpaceTimeField& w() const { return w_; }

  // d^a/dx^a d^b/dt^b u, a, b <= 2.
  double operator()(double x, double t, int dx = 0, int dt = 0) const {
    const double tau = eps_ * omega_ * x, xi = omega_ * t;
    const double sx = std::pow(eps_ * omega_, dx), st = std::pow(omega_, dt);
    double s = V_.value(tau, dx) * trig_sin(xi, 1, dt);
    SpatialField ws = w_.slice(tau, dx);
    for (int k = 2; k <= ws.band(); ++k) s += ws(k) * trig_sin(xi, k, dt);
    return eps_ * sx * st * s;
  }

  // Values (and derivatives) on the tensor grid x_l = X l / nx, t_i = T i / nt; rows are x.
  Eigen::MatrixXd grid(int nx, int nt, int dx = 0, int dt = 0, double x0 = 0.0, double t0 = 0.0) const {
    if (nx < 1 || nt < 1) throw DomainError("grid sizes must be positive");
    const double wt = kTwoPi / V_.period();
    const int J = std::max<int>(w_.nt(), int(V_.coeffs().size()) - 1), K = std::max(w_.nx(), 1);
    Eigen::MatrixXd C(nx, J + 1), S(K, nt);
    for (int l = 0; l < nx; ++l) {
      double tau = eps_ * omega_ * (x0 + x_period() * l / nx);
      for (int j = 0; j <= J; ++j) {
        double ph = wt * j * tau;
        C(l, j) = dx == 0 ? std::cos(ph) : dx == 1 ? -wt * j * std::sin(ph) : -(wt * j) * (wt * j) * std::cos(ph);
      }
    }
    for (int k = 1; k <= K; ++k)
      for (int i = 0; i < nt; ++i) S(k - 1, i) = trig_sin(omega_ * (t0 + t_period() * i / nt), k, dt);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(J + 1, K);
    A.col(0).head(V_.coeffs().size()) = V_.coeffs();
    if (w_.nx() >= 2) A.block(0, 1, w_.nt() + 1, w_.nx() - 1) = w_.coeffs();
    return eps_ * std::pow(eps_ * omega_, dx) * std::pow(omega_, dt) * (C * A * S);
  }

 private:
  static double trig_sin(double xi, int k, int d) {
    double ph = k * xi;
    switch (d) {
      case 0: return std::sin(ph);
      case 1: return k * std::cos(ph);
      case 2: return -double(k) * k * std::sin(ph);
      default: throw DomainError("at most two t-derivatives");
    }
  }

  double eps_, omega_;
  Trajectory V_;
  SpaceTimeField w_;
};

struct SymmetryReport {
  double even_x = 0.0;
  double odd_t = 0.0;
  double period_x = 0.0;
  double period_t = 0.0;
};

inline SymmetryReport symmetry_defects(const AssembledSolution& u, int n = 32) {
  SymmetryReport r;
  const double X = u.x_period(), T = u.t_period();
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i) {
      double x = X * l / n, t = T * i / n, v = u(x, t);
      r.even_x = std::max(r.even_x, std::abs(v - u(-x, t)));
      r.odd_t = std::max(r.odd_t, std::abs(v + u(x, -t)));
      r.period_x = std::max(r.period_x, std::abs(v - u(x + X, t)));
      r.period_t = std::max(r.period_t, std::abs(v - u(x, t + T)));
    }
  return r;
}

inline AssembledSolution assemble_u(const Trajectory& V, const SpaceTimeField& w, double eps,
                                    double sym_tol = 1e-12) {
  AssembledSolution u(eps, V, trim_bands(w));
  SymmetryReport s = symmetry_defects(u, 32);
  if (s.even_x > sym_tol || s.odd_t > sym_tol)
    throw AssemblyError("assembled solution violates parity: even_x " + detail::shortest(s.even_x) + ", odd_t " +
                        detail::shortest(s.odd_t));
  return u;
}

inline AssembledSolution assemble_u(const ClosureResult& c, double sym_tol = 1e-12) {
  if (!c.closed) throw AssemblyError("closure did not converge");
  return assemble_u(c.V, c.w, c.eps, sym_tol);
}

// sup |u_tt - u_xx + u - f(u)| on an (nx x nt) grid over one period in each variable.
inline double pde_residual(const AssembledSolution& u, const AnalyticOddNonlinearity& model, int nx = 128,
                           int nt = 128) {
  Eigen::MatrixXd U = u.grid(nx, nt), Utt = u.grid(nx, nt, 0, 2), Uxx = u.grid(nx, nt, 2, 0);
  double r = 0.0;
  for (int l = 0; l < nx; ++l)
    for (int i = 0; i < nt; ++i)
      r = std::max(r, std::abs(Utt(l, i) - Uxx(l, i) + U(l, i) - model.eval(U(l, i))));
  return r;
}

inline double max_abs_u(const AssembledSolution& u, int nx = 128, int nt = 128) {
  return u.grid(nx, nt).cwiseAbs().maxCoeff();
}

// sup_x || Q(u(x, .)/eps - p(eps omega x)) ||_{C^0_t}, Q keeping sin(k omega t), k >= 2; by discrete sine projection.
inline double tail_norm(const AssembledSolution& u, const Trajectory& limit_orbit, int nx = -1, int nt = -1) {
  if (nx < 0) nx = std::max(64, 4 * u.w().nt());
  if (nt < 0) nt = std::max(64, 4 * u.w().nx());
  const int kmax = nt / 2 - 1;
  Eigen::MatrixXd G = u.grid(nx, nt) / u.eps();
  Eigen::MatrixXd Sn(nt, kmax - 1);
  for (int i = 0; i < nt; ++i)
    for (int k = 2; k <= kmax; ++k) Sn(i, k - 2) = std::sin(kTwoPi * double((long(k) * i) % nt) / nt);
  double sup = 0.0;
  for (int l = 0; l < nx; ++l) {
    double p = limit_orbit.value(u.eps() * u.omega() * u.x_period() * l / nx);
    Eigen::RowVectorXd g = G.row(l).array() - p;
    Eigen::RowVectorXd b = (2.0 / nt) * (g * Sn);
    Eigen::RowVectorXd q = b * Sn.transpose();
    sup = std::max(sup, q.cwiseAbs().maxCoeff());
  }
  return sup;
}

// ---- sweeps -----------------------------------------------------------------

struct SweepConfig {
  SolverConfig solver;
  ClosureOptions closure;
  int grid_n = 128;
  double deriv_step = 1e-4;  // centered eps-difference for the d w / d eps monitor
  int threads = 0;           // 0: KG_THREADS or hardware
};

struct SweepRow {
  double eps = 0.0;
  bool resonant_skip = false;
  std::string resonance;
  double residual = NAN;
  double max_u_over_eps = NAN;
  double tail = NAN;
  double delta1 = NAN;
  double norm_w1 = NAN;          // ||y||_1, the normal-form remainder solved for
  double norm_w1_physical = NAN; // ||y - S||_1
  double dw_deps = NAN;
  bool converged = false;
  std::string error;
};

struct FitSummary {
  std::optional<LinearFit> fit;  // empty: insufficient data
};

struct SweepReport {
  std::vector<SweepRow> rows;
  FitSummary tail, norm_w1, norm_w1_physical, delta1;
  double amplitude_spread = NAN;  // max/min of max|u|/eps over converged rows
  int converged_rows = 0;
  std::string status;
};

inline SweepRow sweep_row(const AnalyticOddNonlinearity& model, const PlanarOrbit& orbit, double eps,
                          const SweepConfig& cfg) {
  SweepRow row;
  row.eps = eps;
  Trajectory V0 = orbit.trajectory();
  try {
    ResonanceReport g = resonance_gate(V0, eps, model, cfg.solver.resonance, cfg.solver.gate_k_max);
    row.resonance = g.describe();
    if (g.resonant) {
      row.resonant_skip = true;
      return row;
    }
    ClosureResult c = solve_delta1(orbit, eps, model, cfg.solver, cfg.closure);
    row.delta1 = c.delta1;
    row.norm_w1 = norm_s(c.run.y, 1.0);
    row.norm_w1_physical = norm_s(c.w, 1.0);
    AssembledSolution u = assemble_u(c);
    row.residual = pde_residual(u, model, cfg.grid_n, cfg.grid_n);
    row.max_u_over_eps = max_abs_u(u, cfg.grid_n, cfg.grid_n) / eps;
    row.tail = tail_norm(u, V0);
    if (cfg.deriv_step > 0.0) row.dw_deps = epsilon_derivative_norm(c.V, eps, cfg.deriv_step, cfg.solver, model);
    row.converged = c.closed && c.run.converged;
    if (!c.closed) row.error = "closure not reached";
  } catch (const std::exception& e) {
    row.error = e.what();
    row.converged = false;
  }
  return row;
}

namespace detail {
inline FitSummary log_fit(const std::vector<SweepRow>& rows, double SweepRow::*field) {
  std::vector<double> x, y;
  for (auto& r : rows)
    if (r.converged && !(r.dw_deps > 0.5) && std::isfinite(r.*field) && r.*field != 0.0) {
      x.push_back(1.0 / r.eps);
      y.push_back(std::log(std::abs(r.*field)));
    }
  FitSummary f;
  if (x.size() >= 3) f.fit = linear_fit(x, y);
  return f;
}
}  // namespace detail

inline SweepReport epsilon_sweep(const AnalyticOddNonlinearity& model, double amplitude,
                                 const std::vector<double>& eps_list, const SweepConfig& cfg) {
  SweepReport rep;
  rep.rows.resize(eps_list.size());
  if (eps_list.empty()) {
    rep.status = "empty";
    return rep;
  }
  for (double e : eps_list)
    if (!(e > 0.0 && e < 1.0)) throw DomainError("sweep epsilon " + detail::shortest(e) + " outside (0, 1)");
  cfg.solver.validate();
  PlanarOrbit orbit = find_orbit(model.f3(), amplitude);
  if (!monodromy(orbit, model.f3()).nondegenerate) throw DegeneracyError("limit orbit is degenerate");
  detail::parallel_for(
      int(eps_list.size()), [&](int i) { rep.rows[i] = sweep_row(model, orbit, eps_list[i], cfg); },
      cfg.threads > 0 ? cfg.threads : detail::thread_count());
  double lo = INFINITY, hi = 0.0;
  for (auto& r : rep.rows)
    if (r.converged) {
      ++rep.converged_rows;
      lo = std::min(lo, r.max_u_over_eps), hi = std::max(hi, r.max_u_over_eps);
    }
  if (rep.converged_rows > 0) rep.amplitude_spread = hi / lo;
  rep.tail = detail::log_fit(rep.rows, &SweepRow::tail);
  rep.norm_w1 = detail::log_fit(rep.rows, &SweepRow::norm_w1);
  rep.norm_w1_physical = detail::log_fit(rep.rows, &SweepRow::norm_w1_physical);
  rep.delta1 = detail::log_fit(rep.rows, &SweepRow::delta1);
  rep.status = rep.converged_rows == 0 ? "no data" : rep.converged_rows < 3 ? "insufficient data" : "ok";
  return rep;
}

inline void write_sweep_csv(std::ostream& os, const SweepReport& rep, const std::string& config_line = "") {
  auto num = [](double v) { return std::isfinite(v) ? detail::shortest(v) : std::string("nan"); };
  if (!config_line.empty()) os << "# config=" << config_line << '\n';
  os << "eps,resonant_skip,residual,max_u_over_eps,tail,delta1,converged,norm_w1,norm_w1_physical,dw_deps\n";
  for (auto& r : rep.rows)
    os << num(r.eps) << ',' << (r.resonant_skip ? 1 : 0) << ',' << num(r.residual) << ',' << num(r.max_u_over_eps)
       << ',' << num(r.tail) << ',' << num(r.delta1) << ',' << (r.converged ? 1 : 0) << ',' << num(r.norm_w1) << ','
       << num(r.norm_w1_physical) << ',' << num(r.dw_deps) << '\n';
}

inline nlohmann::json to_json(const FitSummary& f) {
  if (!f.fit) return "insufficient data";
  return {{"slope", f.fit->slope}, {"intercept", f.fit->intercept}, {"r2", f.fit->r2}, {"n", f.fit->n}};
}

inline nlohmann::json to_json(const SweepReport& rep) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json rows = nlohmann::json::array();
  for (auto& r : rep.rows)
    rows.push_back({{"eps", r.eps},
                    {"resonant_skip", r.resonant_skip},
                    {"resonance", r.resonance},
                    {"residual", num(r.residual)},
                    {"max_u_over_eps", num(r.max_u_over_eps)},
                    {"tail", num(r.tail)},
                    {"delta1", num(r.delta1)},
                    {"norm_w1", num(r.norm_w1)},
                    {"norm_w1_physical", num(r.norm_w1_physical)},
                    {"dw_deps", num(r.dw_deps)},
                    {"converged", r.converged},
                    {"error", r.error}});
  return {{"status", rep.status},
          {"converged_rows", rep.converged_rows},
          {"amplitude_spread", num(rep.amplitude_spread)},
          {"fits",
           {{"log_tail_vs_inv_eps", to_json(rep.tail)},
            {"log_norm_w1_vs_inv_eps", to_json(rep.norm_w1)},
            {"log_norm_w1_physical_vs_inv_eps", to_json(rep.norm_w1_physical)},
            {"log_delta1_vs_inv_eps", to_json(rep.delta1)}}},
          {"rows", rows}};
}

}  // namespace kgwave
