#include <kgwave/assembly_verify.hpp>
#include <kgwave/config.hpp>
#include <kgwave/divisors.hpp>
#include <kgwave/galerkin_solver.hpp>
#include <kgwave/orbit_closure.hpp>
#include <kgwave/planar_limit.hpp>
#include <kgwave/properties.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace kgwave;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kResonant = 2, kNoOrbit = 3, kNoConvergence = 4, kTooFewRows = 5, kSelftestFail = 6 };

fs::path out_path(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.output_dir);
  return fs::path(c.output_dir) / name;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

int effective_threads(const RunConfig& c) {
  int env = detail::thread_count();
  return c.threads > 0 ? std::min(c.threads, env) : env;
}

int cmd_limit_orbit(const RunConfig& c) {
  auto model = c.model.build();
  PlanarOrbit o;
  try {
    o = find_orbit(model.f3(), c.amplitude);
  } catch (const NoPeriodicOrbitError& e) {
    std::cerr << "no periodic orbit: " << e.what() << '\n';
    return kNoOrbit;
  }
  MonodromyReport m = monodromy(o, model.f3());
  write_json(out_path(c, "orbit.json"), {{"config", to_json(c)}, {"orbit", to_json(o)}, {"monodromy", to_json(m)}});
  std::cout << "period " << detail::shortest(o.period) << " nondegenerate " << (m.nondegenerate ? "true" : "false")
            << '\n';
  if (!m.nondegenerate) {
    std::cerr << "orbit is degenerate: rank(M - I) = " << m.rank_M_minus_I << '\n';
    return kNoOrbit;
  }
  return kOk;
}

int cmd_divisors(const RunConfig& c) {
  const auto& D = c.divisors;
  std::ofstream os(out_path(c, "divisors.csv"));
  os << "# config=" << to_json(c).dump() << '\n';
  if (D.k_max < D.k_min || D.j_max < 1) {
    os << "k,j,eps_kj,window_lo,window_hi\n";
    std::cout << "empty range\n";
    return kOk;
  }
  auto model = c.model.build();
  HillSpectrum spec;
  if (D.potential == "zero") {
    double p = D.period ? *D.period : find_orbit(model.f3(), c.amplitude).period;
    spec = flat_spectrum(p, 0.0, D.j_max);
  } else {
    Trajectory V = find_orbit(model.f3(), c.amplitude).trajectory();
    spec = hill_eigs(averaged_potential(V, nullptr, *D.eps, model), D.j_max);
  }
  DivisorTable t(spec, D.k_max);
  t.write_csv(os, c.solver.resonance, D.k_min);
  std::cout << "max residual " << detail::shortest(t.max_residual()) << '\n';
  return kOk;
}

int cmd_solve(const RunConfig& c) {
  if (!c.eps) throw ConfigError("field 'eps': required by solve");
  const double eps = *c.eps;
  auto model = c.model.build();
  PlanarOrbit o;
  try {
    o = find_orbit(model.f3(), c.amplitude);
  } catch (const NoPeriodicOrbitError& e) {
    std::cerr << "no periodic orbit: " << e.what() << '\n';
    return kNoOrbit;
  }
  MonodromyReport mono = monodromy(o, model.f3());
  if (!mono.nondegenerate) {
    std::cerr << "limit orbit is degenerate\n";
    return kNoOrbit;
  }
  ResonanceReport gate = resonance_gate(o.trajectory(), eps, model, c.solver.resonance, c.solver.gate_k_max);
  if (gate.resonant) {
    write_json(out_path(c, "resonance.json"),
               {{"config", to_json(c)},
                {"resonant", true},
                {"k", gate.k},
                {"j", gate.j},
                {"center", gate.center},
                {"half_width", gate.half_width},
                {"distance", gate.distance}});
    std::cerr << "eps " << detail::shortest(eps) << " is resonant: " << gate.describe() << '\n';
    return kResonant;
  }
  ClosureResult r;
  try {
    r = solve_delta1(o, eps, model, c.solver, c.closure);
  } catch (const NearSingularError& e) {
    std::cerr << "resonance detected during solve: " << e.what() << '\n';
    return kResonant;
  } catch (const SolverDivergence& e) {
    json hist = json::array();
    for (auto& s : e.history) hist.push_back(to_json(s));
    write_json(out_path(c, "diagnostics.json"), {{"config", to_json(c)}, {"error", e.what()}, {"stages", hist}});
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const DegeneracyError& e) {
    std::cerr << e.what() << '\n';
    return kNoOrbit;
  }
  json out = {{"config", to_json(c)},
              {"resonance", gate.describe()},
              {"orbit", {{"period", o.period}, {"amplitude", o.amplitude}, {"energy", o.energy}}},
              {"solver", to_json(r.run)},
              {"closure", to_json(r)}};
  bool ok = r.closed && r.run.converged;
  if (ok) {
    AssembledSolution u = assemble_u(r);
    SymmetryReport s = symmetry_defects(u);
    double res = pde_residual(u, model, c.grid_n, c.grid_n);
    out["verification"] = {{"pde_residual", res},
                           {"grid", {c.grid_n, c.grid_n}},
                           {"t_period", u.t_period()},
                           {"x_period", u.x_period()},
                           {"even_x_defect", s.even_x},
                           {"odd_t_defect", s.odd_t},
                           {"max_u_over_eps", max_abs_u(u, c.grid_n, c.grid_n) / eps},
                           {"tail", tail_norm(u, o.trajectory())},
                           {"doubled_grid_residual", verify_residual(r.run, model)}};
    std::cout << "converged: residual " << detail::shortest(res) << " delta1 " << detail::shortest(r.delta1) << '\n';
  }
  write_json(out_path(c, ok ? "solve.json" : "diagnostics.json"), out);
  if (!ok) {
    std::cerr << "closure not reached (d = " << detail::shortest(r.d) << ")\n";
    return kNoConvergence;
  }
  return kOk;
}

int cmd_sweep(const RunConfig& c) {
  auto model = c.model.build();
  SweepConfig sc;
  sc.solver = c.solver;
  sc.closure = c.closure;
  sc.grid_n = c.grid_n;
  sc.deriv_step = c.deriv_step;
  sc.threads = effective_threads(c);
  SweepReport rep;
  try {
    rep = epsilon_sweep(model, c.amplitude, c.eps_list, sc);
  } catch (const NoPeriodicOrbitError& e) {
    std::cerr << "no periodic orbit: " << e.what() << '\n';
    return kNoOrbit;
  } catch (const DegeneracyError& e) {
    std::cerr << e.what() << '\n';
    return kNoOrbit;
  }
  {
    std::ofstream os(out_path(c, "sweep.csv"));
    write_sweep_csv(os, rep, to_json(c).dump());
  }
  json summary = to_json(rep);
  summary["config"] = to_json(c);
  write_json(out_path(c, "sweep_summary.json"), summary);
  std::cout << "converged rows " << rep.converged_rows << " of " << rep.rows.size() << " (" << rep.status << ")\n";
  return rep.converged_rows >= 3 ? kOk : kTooFewRows;
}

int cmd_selftest(const RunConfig& c) {
  bool all = true;
  auto line = [&](const std::string& name, bool ok, const std::string& detail) {
    all = all && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
  };
  double js = j_eps_inverse_sup();
  line("J_eps inverse bound", js <= 2.0, "sup " + detail::shortest(js));

  std::vector<double> g(64);
  for (int l = 0; l < 64; ++l) g[l] = std::pow(std::sin(kTwoPi * l / 64), 3);
  double P = project_P(g);
  SpatialField Q = project_Q(g, 5);
  bool pq = std::abs(P - 0.75) < 1e-14 && std::abs(Q(3) + 0.25) < 1e-14 && std::abs(Q(2)) < 1e-14;
  line("P/Q of sin^3", pq, "P " + detail::shortest(P) + ", Q_3 " + detail::shortest(Q(3)));

  auto r = run_projection_and_tame_suite(c.seed, c.samples);
  line("projection inequalities", r.lp_ok,
       "worst ratios " + detail::shortest(r.worst_lp1) + ", " + detail::shortest(r.worst_lp2));
  line("tame product bound", r.tame_ok,
       "C fit " + detail::shortest(r.tame_C_fit) + ", refresh " + detail::shortest(r.tame_C_refresh));

  auto sg = AnalyticOddNonlinearity::sine_gordon();
  PlanarOrbit o = find_orbit(sg.f3(), 1.0);
  MonodromyReport m = monodromy(o, sg.f3());
  line("limit orbit non-degeneracy", m.nondegenerate,
       "rank(M - I) " + std::to_string(m.rank_M_minus_I) + ", gap " + detail::shortest(m.singular_values_M_minus_I[0]));

  DivisorTable t(flat_spectrum(o.period, 0.0, 2000), 8);
  line("divisor table residual", t.max_residual() <= 1e-12, "max " + detail::shortest(t.max_residual()));
  return all ? kOk : kSelftestFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly periodic solutions of nonlinear Klein-Gordon equations"};
  app.require_subcommand(1);
  std::string config_path;
  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
    bool config_required;
  };
  const Sub subs[] = {{"limit-orbit", "periodic orbit of the limit equation and its monodromy", cmd_limit_orbit, true},
                      {"divisors", "table of divisor roots and resonance windows", cmd_divisors, true},
                      {"solve", "full pipeline at one epsilon", cmd_solve, true},
                      {"sweep", "pipeline over an epsilon list with fits", cmd_sweep, true},
                      {"selftest", "property suites", cmd_selftest, false}};
  std::vector<CLI::App*> cmds;
  for (auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    auto* opt = sc->add_option("-c,--config", config_path, "JSON config file");
    if (s.config_required) opt->required();
    cmds.push_back(sc);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (!cmds[i]->parsed()) continue;
    try {
      RunConfig cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
      return subs[i].run(cfg);
    } catch (const ConfigError& e) {
      std::cerr << "invalid config: " << e.what() << '\n';
      return kInvalid;
    } catch (const DomainError& e) {
      std::cerr << "invalid input: " << e.what() << '\n';
      return kInvalid;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kInvalid;
    }
  }
  return kInvalid;
}
