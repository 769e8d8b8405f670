#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "assembly_verify.hpp"
#include "errors.hpp"
#include "galerkin_solver.hpp"
#include "nonlinearity.hpp"
#include "orbit_closure.hpp"

namespace kgwave {

struct ModelSpec {
  std::string name = "sine-gordon";
  std::vector<double> coeffs;  // custom only
  std::optional<double> trust_radius;
  int terms = 20;              // sine-gordon series length

  AnalyticOddNonlinearity build() const {
    if (name == "sine-gordon") return AnalyticOddNonlinearity::sine_gordon(terms);
    if (name == "phi4") return trust_radius ? AnalyticOddNonlinearity::phi4(*trust_radius) : AnalyticOddNonlinearity::phi4();
    return trust_radius ? AnalyticOddNonlinearity::custom(coeffs, *trust_radius) : AnalyticOddNonlinearity::custom(coeffs);
  }
};

struct DivisorRange {
  int k_min = 2;
  int k_max = 5;
  int j_max = 500;
  std::string potential = "zero";  // "zero" or "orbit"
  std::optional<double> period;    // zero potential only; default: limit-orbit period
  std::optional<double> eps;       // orbit potential only
};

struct RunConfig {
  ModelSpec model;
  double amplitude = 1.0;
  std::optional<double> eps;
  std::vector<double> eps_list;
  SolverConfig solver;
  ClosureOptions closure;
  DivisorRange divisors;
  std::string output_dir = ".";
  std::uint64_t seed = 1;
  int threads = 0;
  int grid_n = 128;
  int samples = 1000;
  double deriv_step = 1e-4;
};

namespace detail {

inline void only_keys(const nlohmann::json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("field '" + where + "': must be an object");
  for (auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("field '" + (where.empty() ? k : where + "." + k) + "': unknown key");
}

inline double num(const nlohmann::json& j, const std::string& name) {
  if (!j.is_number()) throw ConfigError("field '" + name + "': must be a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("field '" + name + "': must be finite");
  return v;
}

inline int integer(const nlohmann::json& j, const std::string& name) {
  if (!j.is_number_integer()) throw ConfigError("field '" + name + "': must be an integer");
  return j.get<int>();
}

inline double positive(const nlohmann::json& j, const std::string& name) {
  double v = num(j, name);
  if (!(v > 0.0)) throw ConfigError("field '" + name + "': must be positive");
  return v;
}

inline double unit_eps(const nlohmann::json& j, const std::string& name) {
  double v = num(j, name);
  if (!(v > 0.0 && v < 1.0)) throw ConfigError("field '" + name + "': epsilon must lie in (0, 1)");
  return v;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using namespace detail;
  only_keys(j, "", {"model", "amplitude", "eps", "eps_list", "resonance", "solver", "closure", "divisors",
                    "output_dir", "seed", "threads", "grid_n", "samples", "deriv_step"});
  RunConfig c;
  if (j.contains("model")) {
    const auto& m = j["model"];
    only_keys(m, "model", {"name", "coeffs", "trust_radius", "terms"});
    if (m.contains("name")) {
      if (!m["name"].is_string()) throw ConfigError("field 'model.name': must be a string");
      c.model.name = m["name"].get<std::string>();
    }
    if (c.model.name != "sine-gordon" && c.model.name != "phi4" && c.model.name != "custom")
      throw ConfigError("field 'model.name': expected sine-gordon, phi4 or custom");
    if (m.contains("coeffs")) {
      if (!m["coeffs"].is_array()) throw ConfigError("field 'model.coeffs': must be an array");
      for (auto& v : m["coeffs"]) c.model.coeffs.push_back(num(v, "model.coeffs"));
    }
    if (c.model.name == "custom" && (c.model.coeffs.empty() || c.model.coeffs[0] == 0.0))
      throw ConfigError("field 'model.coeffs': custom model needs odd coefficients {c3, c5, ...} with c3 != 0");
    if (c.model.name != "custom" && !c.model.coeffs.empty())
      throw ConfigError("field 'model.coeffs': only allowed for the custom model");
    if (m.contains("trust_radius")) c.model.trust_radius = positive(m["trust_radius"], "model.trust_radius");
    if (m.contains("terms")) {
      c.model.terms = integer(m["terms"], "model.terms");
      if (c.model.terms < 1 || c.model.terms > 60) throw ConfigError("field 'model.terms': must lie in [1, 60]");
    }
  }
  if (j.contains("amplitude")) c.amplitude = positive(j["amplitude"], "amplitude");
  if (j.contains("eps")) c.eps = unit_eps(j["eps"], "eps");
  if (j.contains("eps_list")) {
    if (!j["eps_list"].is_array()) throw ConfigError("field 'eps_list': must be an array");
    for (auto& v : j["eps_list"]) c.eps_list.push_back(unit_eps(v, "eps_list"));
  }
  if (j.contains("resonance")) {
    const auto& r = j["resonance"];
    only_keys(r, "resonance", {"alpha", "l"});
    if (r.contains("alpha")) c.solver.resonance.alpha = num(r["alpha"], "resonance.alpha");
    if (r.contains("l")) c.solver.resonance.l = num(r["l"], "resonance.l");
    try {
      c.solver.resonance.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("field 'resonance': ") + e.what());
    }
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    only_keys(s, "solver", {"s", "sigma", "bar_s", "residual_tol", "max_stage_iters", "N_cap", "tau_cap", "tau_factor",
                            "grid_factor", "nf_steps", "c_emp", "nf_nx", "nf_nt", "nf_low_pass", "inverse_C",
                            "dense_limit", "singular_floor", "gate_k_max"});
    auto& S = c.solver;
    if (s.contains("s")) {
      double v = num(s["s"], "solver.s");
      if (v < 0) throw ConfigError("field 'solver.s': must be >= 0");
      S.s = v;
    }
    if (s.contains("sigma")) S.sigma = num(s["sigma"], "solver.sigma");
    if (s.contains("bar_s")) S.bar_s = num(s["bar_s"], "solver.bar_s");
    if (s.contains("residual_tol")) S.residual_tol = positive(s["residual_tol"], "solver.residual_tol");
    if (s.contains("max_stage_iters")) S.max_stage_iters = integer(s["max_stage_iters"], "solver.max_stage_iters");
    if (s.contains("N_cap")) S.N_cap = integer(s["N_cap"], "solver.N_cap");
    if (s.contains("tau_cap")) S.tau_cap = integer(s["tau_cap"], "solver.tau_cap");
    if (s.contains("tau_factor")) S.tau_factor = positive(s["tau_factor"], "solver.tau_factor");
    if (s.contains("grid_factor")) S.grid_factor = integer(s["grid_factor"], "solver.grid_factor");
    if (s.contains("nf_steps")) S.nf_steps = integer(s["nf_steps"], "solver.nf_steps");
    if (s.contains("c_emp")) S.c_emp = num(s["c_emp"], "solver.c_emp");
    if (s.contains("nf_nx")) S.nf.nx = integer(s["nf_nx"], "solver.nf_nx");
    if (s.contains("nf_nt")) S.nf.nt = integer(s["nf_nt"], "solver.nf_nt");
    if (s.contains("nf_low_pass")) S.nf.low_pass = num(s["nf_low_pass"], "solver.nf_low_pass");
    if (s.contains("inverse_C")) S.inverse.C = num(s["inverse_C"], "solver.inverse_C");
    if (s.contains("dense_limit")) S.inverse.dense_limit = integer(s["dense_limit"], "solver.dense_limit");
    if (s.contains("singular_floor")) S.inverse.singular_floor = positive(s["singular_floor"], "solver.singular_floor");
    if (s.contains("gate_k_max")) S.gate_k_max = integer(s["gate_k_max"], "solver.gate_k_max");
  }
  try {
    c.solver.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("field 'solver': ") + e.what());
  }
  if (j.contains("closure")) {
    const auto& s = j["closure"];
    only_keys(s, "closure", {"n_samples", "ode_tol", "defect_tol", "H_tol", "change_tol", "max_outer"});
    auto& C = c.closure;
    if (s.contains("n_samples")) C.n_samples = integer(s["n_samples"], "closure.n_samples");
    if (s.contains("ode_tol")) C.ode_tol = positive(s["ode_tol"], "closure.ode_tol");
    if (s.contains("defect_tol")) C.defect_tol = positive(s["defect_tol"], "closure.defect_tol");
    if (s.contains("H_tol")) C.H_tol = positive(s["H_tol"], "closure.H_tol");
    if (s.contains("change_tol")) C.change_tol = positive(s["change_tol"], "closure.change_tol");
    if (s.contains("max_outer")) C.max_outer = integer(s["max_outer"], "closure.max_outer");
    if (C.n_samples < 16) throw ConfigError("field 'closure.n_samples': must be >= 16");
    if (C.max_outer < 1) throw ConfigError("field 'closure.max_outer': must be >= 1");
  }
  if (j.contains("divisors")) {
    const auto& d = j["divisors"];
    only_keys(d, "divisors", {"k_min", "k_max", "j_max", "potential", "period", "eps"});
    auto& D = c.divisors;
    if (d.contains("k_min")) D.k_min = integer(d["k_min"], "divisors.k_min");
    if (d.contains("k_max")) D.k_max = integer(d["k_max"], "divisors.k_max");
    if (d.contains("j_max")) D.j_max = integer(d["j_max"], "divisors.j_max");
    if (d.contains("potential")) {
      if (!d["potential"].is_string()) throw ConfigError("field 'divisors.potential': must be a string");
      D.potential = d["potential"].get<std::string>();
    }
    if (d.contains("period")) D.period = positive(d["period"], "divisors.period");
    if (d.contains("eps")) D.eps = unit_eps(d["eps"], "divisors.eps");
    if (D.k_min < 2) throw ConfigError("field 'divisors.k_min': spatial modes start at k = 2");
    if (D.k_max > 100000 || D.j_max > 1000000) throw ConfigError("field 'divisors': range too large");
    if (D.potential != "zero" && D.potential != "orbit")
      throw ConfigError("field 'divisors.potential': expected zero or orbit");
    if (D.potential == "orbit" && !D.eps) throw ConfigError("field 'divisors.eps': required for the orbit potential");
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("field 'output_dir': must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("seed")) {
    const auto& sd = j["seed"];
    if (!sd.is_number_integer() || (!sd.is_number_unsigned() && sd.get<std::int64_t>() < 0))
      throw ConfigError("field 'seed': must be a non-negative integer");
    c.seed = sd.get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    c.threads = integer(j["threads"], "threads");
    if (c.threads < 0) throw ConfigError("field 'threads': must be >= 0");
  }
  if (j.contains("grid_n")) {
    c.grid_n = integer(j["grid_n"], "grid_n");
    if (c.grid_n < 8) throw ConfigError("field 'grid_n': must be >= 8");
  }
  if (j.contains("samples")) {
    c.samples = integer(j["samples"], "samples");
    if (c.samples < 2) throw ConfigError("field 'samples': must be >= 2");
  }
  if (j.contains("deriv_step")) c.deriv_step = num(j["deriv_step"], "deriv_step");
  if (c.model.name == "custom" || c.model.name == "phi4") {
    try {
      c.model.build();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("field 'model': ") + e.what());
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json m = {{"name", c.model.name}};
  if (!c.model.coeffs.empty()) m["coeffs"] = c.model.coeffs;
  if (c.model.trust_radius) m["trust_radius"] = *c.model.trust_radius;
  if (c.model.name == "sine-gordon") m["terms"] = c.model.terms;
  nlohmann::json solver = to_json(c.solver);
  nlohmann::json res = {{"alpha", solver["alpha"]}, {"l", solver["l"]}};
  solver.erase("alpha");
  solver.erase("l");
  nlohmann::json div = {{"k_min", c.divisors.k_min},
                        {"k_max", c.divisors.k_max},
                        {"j_max", c.divisors.j_max},
                        {"potential", c.divisors.potential}};
  if (c.divisors.period) div["period"] = *c.divisors.period;
  if (c.divisors.eps) div["eps"] = *c.divisors.eps;
  nlohmann::json j = {{"model", m},
                      {"amplitude", c.amplitude},
                      {"eps_list", c.eps_list},
                      {"resonance", res},
                      {"solver", solver},
                      {"closure",
                       {{"n_samples", c.closure.n_samples},
                        {"ode_tol", c.closure.ode_tol},
                        {"defect_tol", c.closure.defect_tol},
                        {"H_tol", c.closure.H_tol},
                        {"change_tol", c.closure.change_tol},
                        {"max_outer", c.closure.max_outer}}},
                      {"divisors", div},
                      {"output_dir", c.output_dir},
                      {"seed", c.seed},
                      {"threads", c.threads},
                      {"grid_n", c.grid_n},
                      {"samples", c.samples},
                      {"deriv_step", c.deriv_step}};
  if (c.eps) j["eps"] = *c.eps;
  return j;
}

}  // namespace kgwave
