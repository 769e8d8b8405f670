#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "detail/format.hpp"
#include "divisors.hpp"
#include "errors.hpp"
#include "fourier_space.hpp"
#include "nonlinearity.hpp"
#include "normal_form.hpp"
#include "trajectory.hpp"
#include "wequation.hpp"

namespace kgwave {

struct SolverConfig {
  SobolevIndex s = 1.0;
  double sigma = 3.0;
  double bar_s = 8.0;
  ResonanceParams resonance;
  double residual_tol = 1e-10;
  int max_stage_iters = 20;
  int N_cap = 256;
  int tau_cap = 64;
  double tau_factor = 4.0;  // tau band = min(ceil(tau_factor * (p / 2 pi) * N / eps), tau_cap)
  int grid_factor = 4;
  int nf_steps = -1;        // negative: min(8, floor(c_emp / eps))
  double c_emp = 1.0;
  NormalFormOptions nf;
  InverseParams inverse;
  int gate_k_max = 16;

  void validate() const {
    resonance.validate();
    const double g = resonance.gamma(), l = resonance.l;
    if (!(sigma > g + l)) throw ConfigError("sigma must exceed gamma + l = " + detail::shortest(g + l));
    if (!(bar_s > 4.0 * g + 2.0 * sigma)) throw ConfigError("bar_s must exceed 4 gamma + 2 sigma");
    if (!(s.s >= 0.0)) throw ConfigError("s must be >= 0");
    if (!(residual_tol > 0.0)) throw ConfigError("residual_tol must be positive");
    if (max_stage_iters < 1) throw ConfigError("max_stage_iters must be >= 1");
    if (N_cap < 2) throw ConfigError("N_cap must be >= 2");
    if (tau_cap < 0) throw ConfigError("tau_cap must be >= 0");
    if (!(tau_factor > 0.0)) throw ConfigError("tau_factor must be positive");
    if (grid_factor < 3) throw ConfigError("grid_factor must be >= 3");
    if (!(c_emp >= 0.0)) throw ConfigError("c_emp must be >= 0");
    if (nf.nx < 2 || nf.nt < 0) throw ConfigError("normal-form bands invalid");
    if (!(nf.low_pass > 0.0 && nf.low_pass < 1.0)) throw ConfigError("normal-form low_pass must lie in (0, 1)");
    if (inverse.dense_limit < 0) throw ConfigError("dense_limit must be >= 0");
    if (!(inverse.C > 0.0)) throw ConfigError("inverse-law constant C must be positive");
    if (gate_k_max < 2) throw ConfigError("gate_k_max must be >= 2");
  }

  int nf_step_count(double eps) const { return nf_steps >= 0 ? nf_steps : default_nf_steps(eps, c_emp); }
};

// Nested spatial truncations N_1 < N_2 < ... with N_1 = floor((1/eps + 1/eps^2)/2), N_{i+1} = min(N_i^2, N_cap).
inline std::vector<int> truncation_schedule(double eps, int N_cap) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  double n1 = std::floor(0.5 * (1.0 / eps + 1.0 / (eps * eps)) * (1.0 + 1e-12));
  std::vector<int> out{int(std::min<double>(std::max(n1, 2.0), N_cap))};
  while (out.back() < N_cap) out.push_back(int(std::min<long>(long(out.back()) * out.back(), N_cap)));
  return out;
}

inline int tau_band(double eps, double period, int N, const SolverConfig& cfg) {
  double b = std::ceil(cfg.tau_factor * period / kTwoPi * N / eps);
  return int(std::min<double>(b, cfg.tau_cap));
}

struct StageRecord {
  int N = 0;
  int nt = 0;
  int unknowns = 0;
  double increment_norm = 0.0;  // ||y_i - y_{i-1}||_s
  double residual = 0.0;        // ||F||_s at exit
  double sigma_min = 0.0;
  double inverse_ratio = 0.0;
  int culprit_k = 0;
  int culprit_j = 0;
  std::string method;
  int newton_iters = 0;
  int linear_iters = 0;
};

struct SolverRun {
  SolverConfig config;
  double eps = 0.0;
  Trajectory V;
  std::vector<StageRecord> stages;
  SpaceTimeField y;            // solution of the shifted problem F(V, y - S) = 0
  SpaceTimeField offset;       // normal-form shift S
  SpaceTimeField w;            // physical correction y - S
  std::vector<double> nf_history;
  int nf_steps = 0;
  bool converged = false;
  bool capped = false;         // the N_i^2 rule was clipped by N_cap
  bool stage_contraction = true;
  double final_residual = 0.0;
  std::vector<std::string> warnings;
};

struct SolverDivergence : Error {
  std::vector<StageRecord> history;
  SolverDivergence(const std::string& what, std::vector<StageRecord> h) : Error(what), history(std::move(h)) {}
};

// F(V, y - S) on bands (nx, nt); with S = nullptr this is the unshifted w-equation.
inline SpaceTimeField assemble_F(const Trajectory& V, const SpaceTimeField& y, double eps,
                                 const AnalyticOddNonlinearity& model, const SpaceTimeField* offset = nullptr,
                                 int grid_factor = 4) {
  if (std::abs(y.period() - V.period()) > 1e-12 * V.period()) throw ShapeError("field period differs from V");
  return StageProblem(V, eps, model, y.nx(), y.nt(), offset, grid_factor).residual(y);
}

// Linearization of assemble_F at y, truncated to spatial modes k <= N.
inline LinearizedOperator assemble_L(const Trajectory& V, const SpaceTimeField& y, double eps,
                                     const AnalyticOddNonlinearity& model, int N,
                                     const SpaceTimeField* offset = nullptr) {
  if (N < 2) throw DomainError("truncation N must be >= 2");
  if (std::abs(y.period() - V.period()) > 1e-12 * V.period()) throw ShapeError("field period differs from V");
  StageProblem sp(V, eps, model, N, y.nt(), offset);
  return sp.linearize(y.resized(N, y.nt()));
}

inline HillSpectrum gate_spectrum(const Trajectory& V, double eps, const AnalyticOddNonlinearity& model, int k_max) {
  const int j_max = int(std::ceil(2.0 * k_max * std::max(1.0, V.period() / kTwoPi) / eps)) + 8;
  return hill_eigs(averaged_potential(V, nullptr, eps, model), j_max);
}

// Window test against the Hill spectrum of the x-averaged potential along V.
inline ResonanceReport resonance_gate(const Trajectory& V, double eps, const AnalyticOddNonlinearity& model,
                                      const ResonanceParams& rp, int k_max) {
  DivisorTable t(gate_spectrum(V, eps, model, k_max), k_max);
  return is_resonant(eps, rp, t, 2, k_max);
}

namespace detail {

inline Eigen::VectorXd flat(const SpaceTimeField& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.coeffs().data(), f.coeffs().size());
}

inline void add_flat(SpaceTimeField& f, const Eigen::VectorXd& d, double a) {
  Eigen::Map<Eigen::VectorXd>(f.coeffs().data(), f.coeffs().size()) += a * d;
}

}  // namespace detail

inline SolverRun nash_moser_solve(const Trajectory& V, double eps, const SolverConfig& cfg,
                                  const AnalyticOddNonlinearity& model, const SpaceTimeField* initial = nullptr) {
  cfg.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  SolverRun run;
  run.config = cfg;
  run.eps = eps;
  run.V = V;
  const double p = V.period();

  NormalFormOptions nfo = cfg.nf;
  nfo.nt = std::max(nfo.nt, V.band());
  run.nf_steps = cfg.nf_step_count(eps);
  TransformedSystem nf = nf_sequence(V, eps, model, run.nf_steps, nfo);
  run.nf_steps = nf.step();
  run.nf_history = nf.drive_norm_history();
  for (auto& w : nf.warnings()) run.warnings.push_back(w);
  run.offset = nf.offset();
  const SpaceTimeField* S = run.nf_steps > 0 ? &run.offset : nullptr;

  std::vector<int> sched = truncation_schedule(eps, cfg.N_cap);
  run.capped = sched.size() >= 2 && long(sched[sched.size() - 2]) * sched[sched.size() - 2] > cfg.N_cap;
  if (sched.size() == 1) run.capped = std::floor(0.5 * (1.0 / eps + 1.0 / (eps * eps)) * (1.0 + 1e-12)) > cfg.N_cap;

  SpaceTimeField y = initial ? *initial : SpaceTimeField(p, sched.front(), tau_band(eps, p, sched.front(), cfg));
  SpaceTimeField prev(p, 2, 0);
  for (int N : sched) {
    const int nt = tau_band(eps, p, N, cfg);
    StageProblem sp(V, eps, model, N, nt, S, cfg.grid_factor);
    y = y.resized(N, nt);
    StageRecord rec;
    rec.N = N, rec.nt = nt, rec.unknowns = (N - 1) * (nt + 1);
    SpaceTimeField r = sp.residual(y);
    double rn = norm_s(r, cfg.s);
    int it = 0;
    while (true) {
      if (rn == 0.0 || (rn <= cfg.residual_tol && it >= 1)) break;
      if (it >= cfg.max_stage_iters) {
        rec.residual = rn, rec.newton_iters = it;
        run.stages.push_back(rec);
        throw SolverDivergence("Newton did not reach residual " + detail::shortest(cfg.residual_tol) + " at N=" +
                                   std::to_string(N) + " (residual " + detail::shortest(rn) + ")",
                               run.stages);
      }
      LinearizedOperator L = sp.linearize(y);
      LinearSolution sol = invert_L_N(L, -detail::flat(r), eps, cfg.inverse);
      rec.sigma_min = sol.report.sigma_min;
      rec.inverse_ratio = sol.report.ratio;
      rec.culprit_k = sol.report.culprit_k, rec.culprit_j = sol.report.culprit_j;
      rec.method = sol.report.method;
      rec.linear_iters += sol.report.iterations;
      ++it;
      double a = 1.0;
      bool accepted = false;
      for (int h = 0; h < 12; ++h, a *= 0.5) {
        SpaceTimeField trial = y;
        detail::add_flat(trial, sol.x, a);
        try {
          SpaceTimeField rt = sp.residual(trial);
          double nt_ = norm_s(rt, cfg.s);
          if (nt_ < rn || nt_ <= cfg.residual_tol) {
            y = std::move(trial), r = std::move(rt), rn = nt_;
            accepted = true;
            break;
          }
        } catch (const DomainError&) {
        }
      }
      if (!accepted) {
        if (rn <= cfg.residual_tol) break;
        rec.residual = rn, rec.newton_iters = it;
        run.stages.push_back(rec);
        throw SolverDivergence("damped Newton stalled at N=" + std::to_string(N) + " (residual " +
                                   detail::shortest(rn) + ")",
                               run.stages);
      }
    }
    rec.newton_iters = it;
    rec.residual = rn;
    SpaceTimeField prev_r = prev.resized(N, nt);
    rec.increment_norm = norm_s(y - prev_r, cfg.s);
    if (!run.stages.empty() && !(rec.increment_norm < run.stages.back().increment_norm) &&
        run.stages.back().increment_norm > 0.0) {
      run.stage_contraction = false;
      run.warnings.push_back("stage increment did not contract at N=" + std::to_string(N));
    }
    run.stages.push_back(rec);
    prev = y;
    if (it == 0 && rn == 0.0) break;  // exact fixed point, e.g. a vanishing drive
  }
  run.y = y;
  run.final_residual = run.stages.back().residual;
  run.converged = run.final_residual <= cfg.residual_tol;
  const int bx = std::max(y.nx(), run.offset.nx()), bt = std::max(y.nt(), run.offset.nt());
  run.w = y.resized(bx, bt) - run.offset.resized(bx, bt);
  return run;
}

// ||F|| of the final field re-evaluated on a collocation grid of twice the resolution.
inline double verify_residual(const SolverRun& run, const AnalyticOddNonlinearity& model) {
  const SpaceTimeField* S = run.nf_steps > 0 ? &run.offset : nullptr;
  StageProblem sp(run.V, run.eps, model, run.y.nx(), run.y.nt(), S, 2 * run.config.grid_factor);
  return norm_s(sp.residual(run.y), run.config.s);
}

// Centered eps-difference ||(w(eps + h) - w(eps - h)) / 2h||_s of the physical correction, V held fixed.
inline double epsilon_derivative_norm(const Trajectory& V, double eps, double h, const SolverConfig& cfg,
                                      const AnalyticOddNonlinearity& model) {
  if (!(h > 0.0 && eps - h > 0.0 && eps + h < 1.0)) throw DomainError("difference step leaves (0, 1)");
  SolverRun a = nash_moser_solve(V, eps + h, cfg, model), b = nash_moser_solve(V, eps - h, cfg, model);
  const int bx = std::max(a.w.nx(), b.w.nx()), bt = std::max(a.w.nt(), b.w.nt());
  return norm_s((0.5 / h) * (a.w.resized(bx, bt) - b.w.resized(bx, bt)), cfg.s);
}

inline nlohmann::json to_json(const SolverConfig& c) {
  return {{"s", c.s.s},
          {"sigma", c.sigma},
          {"bar_s", c.bar_s},
          {"alpha", c.resonance.alpha},
          {"l", c.resonance.l},
          {"residual_tol", c.residual_tol},
          {"max_stage_iters", c.max_stage_iters},
          {"N_cap", c.N_cap},
          {"tau_cap", c.tau_cap},
          {"tau_factor", c.tau_factor},
          {"grid_factor", c.grid_factor},
          {"nf_steps", c.nf_steps},
          {"c_emp", c.c_emp},
          {"nf_nx", c.nf.nx},
          {"nf_nt", c.nf.nt},
          {"nf_low_pass", c.nf.low_pass},
          {"inverse_C", c.inverse.C},
          {"dense_limit", c.inverse.dense_limit},
          {"singular_floor", c.inverse.singular_floor},
          {"gate_k_max", c.gate_k_max}};
}

inline nlohmann::json to_json(const StageRecord& r) {
  return {{"N", r.N},
          {"nt", r.nt},
          {"unknowns", r.unknowns},
          {"increment_norm", r.increment_norm},
          {"residual", r.residual},
          {"sigma_min", r.sigma_min},
          {"inverse_ratio", r.inverse_ratio},
          {"culprit", {r.culprit_k, r.culprit_j}},
          {"method", r.method},
          {"newton_iters", r.newton_iters},
          {"linear_iters", r.linear_iters}};
}

inline nlohmann::json to_json(const SolverRun& run, bool with_fields = true) {
  nlohmann::json st = nlohmann::json::array();
  for (auto& r : run.stages) st.push_back(to_json(r));
  nlohmann::json j = {{"config", to_json(run.config)},
                      {"eps", run.eps},
                      {"stages", st},
                      {"nf_steps", run.nf_steps},
                      {"nf_drive_history", run.nf_history},
                      {"converged", run.converged},
                      {"capped", run.capped},
                      {"stage_contraction", run.stage_contraction},
                      {"final_residual", run.final_residual},
                      {"norm_y", norm_s(run.y, SobolevIndex(1.0))},
                      {"norm_w", norm_s(run.w, SobolevIndex(1.0))},
                      {"warnings", run.warnings}};
  if (with_fields) j["w"] = to_json(run.w);
  return j;
}

}  // namespace kgwave
