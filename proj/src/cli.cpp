#include "hmhf/cli.hpp"

#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hmhf/errors.hpp"
#include "hmhf/evolve.hpp"
#include "hmhf/family.hpp"
#include "hmhf/io.hpp"
#include "hmhf/spectrum.hpp"

namespace hmhf {

using nlohmann::json;

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

FamilyConfig family_for(const TargetSurfaceProfile& p, const RunConfig& c, const Eigenmap& e) {
  FamilyConfig fc = family_config(p, e);
  fc.a_min = c.a_min;
  fc.a_max = c.a_max;
  fc.shoot.rtol = c.rtol;
  fc.shoot.atol = c.atol;
  return fc;
}

double equator_of(const TargetSurfaceProfile& p, const RunConfig& c) { return c.s ? *c.s : next_equator(p, 0.0); }

json profile_json(const RunConfig& c, const Eigenmap& e, const Trajectory& t, int crossings) {
  json m = json::parse(config_json(c))["manifold"];
  return {{"manifold", m},       {"d", e.d},           {"l", e.l},
          {"k", e.k},            {"s0", t.spec.s0},    {"a", t.spec.a},
          {"limit", t.tail.limit}, {"limit_bound", t.tail.bound}, {"crossings", crossings},
          {"extrema", extremum_count(t)}};
}

void criterion(const RunConfig& c, const TargetSurfaceProfile& p, Emitter& out) {
  std::ostringstream table;
  table << "d,l,k,s_star,lhs,rhs,verdict\n";
  for (int d = 3; d <= 10; ++d) {
    Eigenmap e = eigenmap_eigenvalue(d, c.l);
    CriterionReport r = minimizing_criterion(p, e, equator_of(p, c));
    table << d << ',' << c.l << ',' << num(e.k) << ',' << num(r.s_star) << ',' << num(r.lhs) << ',' << num(r.rhs)
          << ',' << to_string(r.verdict) << '\n';
  }
  out.write("criterion_table.csv", table.str());
  Eigenmap e = eigenmap_eigenvalue(c.d, c.l);
  CriterionReport r = minimizing_criterion(p, e, equator_of(p, c));
  json j{{"d", c.d},      {"l", c.l},      {"k", e.k},    {"s_star", r.s_star}, {"lhs", r.lhs},
         {"rhs", r.rhs},  {"S", r.S},      {"theta", r.theta}, {"C1", r.c1},    {"C2", r.c2},
         {"verdict", to_string(r.verdict)}};
  out.write("criterion.json", j.dump(2) + "\n");
}

void profile(const RunConfig& c, const TargetSurfaceProfile& p, Emitter& out) {
  Eigenmap e = eigenmap_eigenvalue(c.d, c.l);
  FamilyConfig fc = family_for(p, c, e);
  FamilySweep sw = sweep_family(p, fc);
  double s = *c.s;
  int n = 0;
  for (size_t i = 0; i + 1 < sw.records.size(); ++i) {
    const auto &a = sw.records[i], &b = sw.records[i + 1];
    if ((a.L < s) == (b.L < s) || a.I != b.I) continue;
    Trajectory t = solve_initial_data(p, fc, s, a.a, b.a);
    std::string stem = "profile_" + std::to_string(n++);
    out.write(stem + ".csv", trajectory_csv(p, t));
    out.write(stem + ".json", profile_json(c, e, t, a.I).dump(2) + "\n");
  }
  if (n == 0) throw Error(Errc::NoBracket, "no profile in [a_min, a_max] reaches s = " + num(s));
}

void atlas(const RunConfig& c, const TargetSurfaceProfile& p, Emitter& out) {
  Eigenmap e = eigenmap_eigenvalue(c.d, c.l);
  FamilyConfig fc = family_for(p, c, e);
  FamilySweep sw = sweep_family(p, fc);
  std::ostringstream os;
  os << "a,L,Lbound,M,I\n";
  for (const auto& r : sw.records)
    os << num(r.a) << ',' << num(r.L) << ',' << num(r.Lbound) << ',' << num(r.M) << ',' << r.I << '\n';
  out.write("atlas.csv", os.str());
  json jumps = json::array();
  for (const auto& j : sw.jumps) jumps.push_back({{"n", j.n}, {"a_lo", j.a_lo}, {"a_hi", j.a_hi}, {"L", j.L}});
  out.write("jumps.json", json{{"s_star", sw.s_star}, {"safe_radius", sw.safe.R}, {"jumps", jumps}}.dump(2) + "\n");
}

void multiplicity(const RunConfig& c, const TargetSurfaceProfile& p, Emitter& out) {
  Eigenmap e = eigenmap_eigenvalue(c.d, c.l);
  FamilyConfig fc = family_for(p, c, e);
  MultiplicityWindow w = multiplicity_window(p, e, equator_of(p, c), c.K, fc);
  json profiles = json::array();
  for (const auto& m : w.exemplars.members) {
    profiles.push_back({{"a", m.a}, {"crossings", m.crossings}, {"limit_residual", m.limit_residual}});
    std::string stem = "profile_I" + std::to_string(m.crossings);
    out.write(stem + ".csv", trajectory_csv(p, m.traj));
    out.write(stem + ".json", profile_json(c, e, m.traj, m.crossings).dump(2) + "\n");
  }
  json j{{"s", w.exemplars.s}, {"window", {w.lo, w.hi}}, {"K", c.K}, {"profiles", profiles}};
  out.write("multiplicity.json", j.dump(2) + "\n");
}

void spectrum(const RunConfig& c, const TargetSurfaceProfile& p, Emitter& out) {
  json pj = json::parse(read_file(c.profile_file));
  Eigenmap e{pj.at("d").get<int>(), pj.at("l").get<int>(), pj.at("k").get<double>()};
  FamilyConfig fc = family_for(p, c, e);
  fc.s0 = pj.at("s0").get<double>();
  Trajectory t = shoot(p, fc, pj.at("a").get<double>());
  LinearizedProblem lp = make_problem(p, t);
  SpectralReport r = spectral_report(lp, c.threshold, c.E_hi);
  json j{{"threshold", r.threshold}, {"zero_count", r.zero_count}, {"eigenvalues", r.eigenvalues},
         {"translation_residual", r.translation_residual}};
  out.write("spectrum.json", j.dump(2) + "\n");
  for (size_t i = 0; i < r.eigenvalues.size(); ++i) {
    EigenSolution s = solve_EF(lp, r.eigenvalues[i]);
    std::ostringstream os;
    os << "rho,v,dv\n";
    for (size_t q = 0; q < s.rho.size(); ++q) os << num(s.rho[q]) << ',' << num(s.v[q]) << ',' << num(s.dv[q]) << '\n';
    out.write("eigenfunction_" + std::to_string(i) + ".csv", os.str());
  }
}

std::vector<double> bump(const std::vector<double>& r, double amplitude) {
  std::vector<double> f(r.size(), 0.0);
  for (size_t i = 1; i + 1 < r.size(); ++i) f[i] = amplitude * r[i] * r[i] * std::exp(1 - r[i] * r[i]);
  return f;
}

void evolve(const RunConfig& c, const TargetSurfaceProfile& p, Emitter& out) {
  Eigenmap e = eigenmap_eigenvalue(c.d, c.l);
  FamilyConfig fc = family_for(p, c, e);
  double s_star = next_equator(p, 0.0);
  json rep{{"experiment", c.experiment}, {"d", c.d}, {"l", c.l}, {"k", e.k}};
  EvolutionState run;
  if (c.experiment == "consistency") {
    Trajectory psi = shoot(p, fc, c.s ? *c.s : 1.0);
    ConsistencyReport r = selfsimilar_consistency(p, psi, 1.0, 4.0);
    rep.update({{"a", psi.spec.a}, {"error", r.error}, {"estimate", r.estimate}, {"fine_error", r.fine_error},
                {"pass", r.error < 10 * r.estimate}});
    out.write("report.json", rep.dump(2) + "\n");
    return;
  }
  if (c.experiment == "dissipation") {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(0, 1);
    double alpha = 0.5 + 2.5 * U(rng), b = 0.04 * U(rng), cen = 0.5 + 3 * U(rng);
    std::vector<double> r = evolution_grid(15, 1.01, 1e-4, 1.0), w(r.size());
    for (size_t i = 0; i < r.size(); ++i) {
      double x = r[i], g = std::exp(-alpha * x * x);
      w[i] = -s_star * g - s_star * (1 - g) * b * x * x * std::exp(-(x - cen) * (x - cen));
    }
    EvolutionState s0 = make_state(Chart::SelfSimilar, c.d, e.k, r, w, 0.0, full_source(p, s_star));
    DissipationCheck dc = dissipation_check(s0, 0.5, 100);
    run = s0;
    advance(run, 0.5, 100);
    rep.update({{"non_increasing", dc.coarse.non_increasing}, {"max_increase", dc.coarse.max_increase},
                {"dissipation_residual", dc.coarse.dissipation_residual}, {"scheme_error", dc.scheme_error},
                {"pass", dc.pass}});
  } else if (c.experiment == "linear") {
    double cc = e.k * p.dG(s_star);
    std::vector<double> r = evolution_grid(40 * std::sqrt(c.horizon));
    run = make_state(Chart::Physical, c.d, e.k, r, bump(r, 1.0), 0.0, linear_source(cc, e.k));
    advance(run, c.horizon, 1000);
    double inc = 0;
    for (size_t i = 1; i < run.monitor.size(); ++i) inc = std::max(inc, run.monitor[i].L2 - run.monitor[i - 1].L2);
    rep.update({{"c", cc}, {"hardy", -0.25 * (c.d - 2) * (c.d - 2)}, {"max_L2_increase", inc}});
  } else if (c.experiment == "slice") {
    fc.s_star = s_star;
    FamilySweep sw = sweep_family(p, fc, 1);
    std::vector<JumpPoint> jp = find_jump_points(p, fc, sw, 0);
    if (jp.empty()) throw Error(Errc::JumpNotFound, "no jump point for the expander slice");
    Trajectory psi = shoot(p, fc, jp[0].a_lo);
    GrowthReport g = expander_slice_growth(p, psi, s_star, 1.0, 1.0 + c.horizon, int(20 * c.horizon));
    run = g.run;
    rep.update({{"a", psi.spec.a}, {"growth", g.growth}});
  } else if (c.experiment == "pole") {
    double pole = p.poles().empty() ? 0.0 : p.poles().front();
    PoleStabilityReport r = pole_stability_experiment(
        p, e, pole, [](double x) { return 0.01 * x * x * std::exp(1 - x * x); }, c.horizon);
    run = r.run;
    rep.update({{"c", r.c}, {"f0_sup", r.f0_sup}, {"sup", r.sup}, {"bound", r.bound},
                {"within_bound", r.within_bound}});
  } else if (c.experiment == "weak") {
    std::vector<double> r = evolution_grid(40 * std::sqrt(c.horizon));
    run = make_state(Chart::Physical, c.d, e.k, r, bump(r, 0.1), 0.0, perturbation_source(p, s_star));
    advance(run, c.horizon, 1000);
    WeakEnergyReport w = weak_energy_inequality_check(run, p.min_dG());
    rep.update({{"applicable", w.applicable}, {"ratio", w.ratio}, {"holds", w.holds}});
    if (std::isfinite(w.C)) rep["C"] = w.C;
  }
  out.write("run_log.csv", run_log_csv(run));
  out.write("snapshot.csv", snapshot_csv(run));
  out.write("report.json", rep.dump(2) + "\n");
}

}  // namespace

void run(const RunConfig& c, std::ostream& log) {
  TargetSurfaceProfile p = make_profile(c.manifold);
  Emitter out(c.out);
  out.write("config.json", config_json(c));
  try {
    switch (c.command) {
      case Command::Criterion: criterion(c, p, out); break;
      case Command::Profile: profile(c, p, out); break;
      case Command::Atlas: atlas(c, p, out); break;
      case Command::Multiplicity: multiplicity(c, p, out); break;
      case Command::Spectrum: spectrum(c, p, out); break;
      case Command::Evolve: evolve(c, p, out); break;
    }
  } catch (const Error& err) {
    throw Error(err.code(), std::string(to_string(c.command)) + ": " + err.what());
  }
  out.finish();
  for (const auto& f : out.entries()) log << f.name << ' ' << f.sha256 << '\n';
}

}  // namespace hmhf
