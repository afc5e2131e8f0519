#include "hmhf/evolve.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include <Eigen/Sparse>

#include "hmhf/errors.hpp"
#include "hmhf/numerics.hpp"

namespace hmhf {

namespace {

// g(s + u) - g(s), g'(s + u) - g'(s) and the derived increments of G and g^2, by Taylor expansion
// for small u so that they keep full relative accuracy.
struct Increment {
  double dg, dG, dg2;
};

Increment increment(const TargetSurfaceProfile& p, double s, double u) {
  Jet j = p.jet(s);
  double dg, dg1;
  if (std::abs(u) > 1e-3) {
    Jet q = p.jet(s + u);
    dg = q[0] - j[0];
    dg1 = q[1] - j[1];
  } else {
    dg = u * (j[1] + u * (j[2] / 2 + u * (j[3] / 6 + u * j[4] / 24)));
    dg1 = u * (j[2] + u * (j[3] / 2 + u * j[4] / 6));
  }
  return {dg, dg * j[1] + j[0] * dg1 + dg * dg1, dg * (dg + 2 * j[0])};
}

}  // namespace

Source full_source(const TargetSurfaceProfile& p, double s_ref) {
  double G0 = p.G(s_ref);
  return {"full", s_ref, [&p, s_ref, G0](double, double, double f) { return G0 + increment(p, s_ref, f).dG; },
          [&p, s_ref](double, double, double f) { return p.dG(s_ref + f); },
          [&p, s_ref](double, double, double f) { return increment(p, s_ref, f).dg2; }};
}

Source perturbation_source(const TargetSurfaceProfile& p, double s_star) {
  double G0 = p.G(s_star);
  return {"perturbation", 0.0, [&p, s_star](double, double, double f) { return increment(p, s_star, f).dG; },
          [&p, s_star](double, double, double f) { return p.dG(s_star + f); },
          [&p, s_star, G0](double, double, double f) { return increment(p, s_star, f).dg2 - 2 * G0 * f; }};
}

Source linear_source(double c, double k) {
  double a = c / k;
  return {"linear", 0.0, [a](double, double, double f) { return a * f; },
          [a](double, double, double) { return a; }, [a](double, double, double f) { return a * f * f; }};
}

Source background_source(const TargetSurfaceProfile& p, const Trajectory& psi, Chart chart) {
  auto traj = std::make_shared<const Trajectory>(psi);
  auto base = [traj, chart](double r, double t) {
    return profile_at(*traj, chart == Chart::Physical ? r / std::sqrt(t) : r);
  };
  return {"background", 0.0,
          [&p, base](double r, double t, double f) { return increment(p, base(r, t), f).dG; },
          [&p, base](double r, double t, double f) { return p.dG(base(r, t) + f); },
          [&p, base](double r, double t, double f) {
            double b = base(r, t);
            return increment(p, b, f).dg2 - 2 * p.G(b) * f;
          }};
}

double profile_at(const Trajectory& psi, double x) {
  double R = psi.r.back();
  if (x <= R) return psi.value(x);
  double L = psi.tail.limit;
  return L + (psi.h.back() - L) * (R / x) * (R / x);
}

std::vector<double> evolution_grid(double r_max, double q, double r_min, double uniform_from) {
  if (!(q > 1) || !(r_min > 0) || !(r_max > r_min)) throw Error(Errc::InvalidArgument, "evolution_grid");
  std::vector<double> r{0.0, r_min};
  double h_cap = (q - 1) * uniform_from;
  while (true) {
    double h = std::min((q - 1) * r.back(), h_cap);
    if (r.back() + 1.5 * h >= r_max) break;
    r.push_back(r.back() + h);
  }
  r.push_back(r_max);
  return r;
}

std::vector<double> refine_grid(const std::vector<double>& r) {
  std::vector<double> out;
  out.reserve(2 * r.size());
  for (size_t i = 0; i + 1 < r.size(); ++i) {
    out.push_back(r[i]);
    out.push_back(0.5 * (r[i] + r[i + 1]));
  }
  out.push_back(r.back());
  return out;
}

namespace {

// r^{d-1}, times e^{r^2/4} in the self-similar chart (at most e^{56} on rho <= 15).
double weight(Chart c, int d, double r) {
  double w = std::pow(r, d - 1);
  return c == Chart::SelfSimilar ? w * std::exp(0.25 * r * r) : w;
}

void assemble(EvolutionState& s) {
  size_t n = s.r.size();
  s.edge.assign(n - 1, 0.0);
  s.mass.assign(n, 0.0);
  s.pmass.assign(n, 0.0);
  for (size_t i = 0; i + 1 < n; ++i) {
    double a = s.r[i], b = s.r[i + 1], h = b - a;
    auto w = [&](double x) { return weight(s.chart, s.d, x); };
    s.edge[i] = gauss5(w, a, b) / (h * h);
    s.mass[i] += gauss5([&](double x) { return w(x) * (b - x) / h; }, a, b);
    s.mass[i + 1] += gauss5([&](double x) { return w(x) * (x - a) / h; }, a, b);
    auto wp = [&](double x) { return w(x) / (x * x); };  // Gauss nodes are interior
    s.pmass[i] += gauss5([&](double x) { return wp(x) * (b - x) / h; }, a, b);
    s.pmass[i + 1] += gauss5([&](double x) { return wp(x) * (x - a) / h; }, a, b);
  }
}

}  // namespace

EvolutionState make_state(Chart chart, int d, double k, std::vector<double> r, std::vector<double> f0, double t0,
                          Source source, Scheme scheme) {
  if (r.size() < 3 || r.size() != f0.size() || r.front() != 0.0 || d < 3)
    throw Error(Errc::InvalidArgument, "make_state needs a grid from the origin and d >= 3");
  EvolutionState s;
  s.chart = chart;
  s.scheme = scheme;
  s.d = d;
  s.k = k;
  s.r = std::move(r);
  s.f = std::move(f0);
  s.t = t0;
  s.source = std::move(source);
  double end = s.f.back();
  s.outer = [end](double) { return end; };
  s.background = end;
  assemble(s);
  s.monitor.push_back(measure(s));
  return s;
}

double discrete_energy(const EvolutionState& s) {
  double E = 0;
  for (size_t i = 0; i + 1 < s.r.size(); ++i) {
    double df = s.f[i + 1] - s.f[i];
    E += s.edge[i] * df * df;
  }
  for (size_t i = 0; i < s.r.size(); ++i)
    if (s.pmass[i] > 0) E += s.k * s.pmass[i] * s.source.P(s.r[i], s.t, s.f[i]);
  return E;
}

Monitor measure(const EvolutionState& s) {
  Monitor m;
  m.t = s.t;
  double l2 = 0;
  for (size_t i = 0; i < s.r.size(); ++i) {
    double u = s.f[i] - s.background;
    l2 += s.mass[i] * u * u;
    m.Linf = std::max(m.Linf, std::abs(u));
  }
  m.L2 = std::sqrt(l2);
  for (size_t i = 0; i + 1 < s.r.size(); ++i) {
    double df = s.f[i + 1] - s.f[i];
    m.dirichlet += s.edge[i] * df * df;
  }
  m.energy = discrete_energy(s);
  return m;
}

void step(EvolutionState& s, double dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw Error(Errc::InvalidArgument, "step size must be positive");
  size_t n = s.r.size(), m = n - 2;
  double t1 = s.t + dt;
  // f' ~ (c0 f_{n+1} + c1 f_n + c2 f_{n-1}) / dt
  double c0 = 1, c1 = -1, c2 = 0;
  if (s.scheme == Scheme::BDF2 && s.steps > 0) {
    double w = dt / s.dt_prev;
    c0 = (1 + 2 * w) / (1 + w);
    c1 = -(1 + w);
    c2 = w * w / (1 + w);
  }
  std::vector<double> x = s.f;
  x.back() = s.outer(t1);
  if (s.scheme == Scheme::BDF2 && s.steps > 0)  // linear extrapolation as the Newton start
    for (size_t i = 1; i + 1 < n; ++i) x[i] = s.f[i] + (s.f[i] - s.f_prev[i]) * dt / s.dt_prev;

  Eigen::SparseMatrix<double> J(m, m);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * m);
  Eigen::VectorXd F(m);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool analysed = false, converged = false;
  double last = INFINITY;
  for (int it = 0; it < 30 && !converged; ++it) {
    trip.clear();
    for (size_t i = 1; i + 1 < n; ++i) {
      double hist = c1 * s.f[i] + (c2 != 0 ? c2 * s.f_prev[i] : 0.0);
      double lap = s.edge[i - 1] * (x[i] - x[i - 1]) + s.edge[i] * (x[i] - x[i + 1]);
      double kp = s.k * s.pmass[i];
      F[i - 1] = s.mass[i] * (c0 * x[i] + hist) / dt + lap + kp * s.source.S(s.r[i], t1, x[i]);
      double diag = s.mass[i] * c0 / dt + s.edge[i - 1] + s.edge[i] + kp * s.source.dS(s.r[i], t1, x[i]);
      trip.emplace_back(i - 1, i - 1, diag);
      if (i > 1) trip.emplace_back(i - 1, i - 2, -s.edge[i - 1]);
      if (i + 2 < n) trip.emplace_back(i - 1, i, -s.edge[i]);
    }
    J.setFromTriplets(trip.begin(), trip.end());
    if (!analysed) {
      solver.analyzePattern(J);
      analysed = true;
    }
    solver.factorize(J);
    if (solver.info() != Eigen::Success) throw Error(Errc::StepRejected, "singular Newton matrix");
    Eigen::VectorXd dx = solver.solve(F);
    double big = 0, scale = 0;
    for (size_t i = 1; i + 1 < n; ++i) {
      x[i] -= dx[i - 1];
      big = std::max(big, std::abs(dx[i - 1]));
      scale = std::max(scale, std::abs(x[i]));
    }
    if (!std::isfinite(big)) break;
    // the e^{rho^2/4} weight limits attainable accuracy; stalled tiny updates are round-off
    converged = big <= 1e-13 * std::max(1.0, scale) || (big <= 1e-9 * std::max(1.0, scale) && big > 0.5 * last);
    last = big;
  }
  if (!converged) throw Error(Errc::StepRejected, "Newton did not converge at t = " + std::to_string(t1));
  for (double v : x)
    if (!std::isfinite(v)) throw Error(Errc::StepRejected, "non-finite field");

  double diss = 0;
  for (size_t i = 0; i < n; ++i) {
    double u = (x[i] - s.f[i]) / dt;
    diss += s.mass[i] * u * u;
  }
  s.f_prev = std::move(s.f);
  s.f = std::move(x);
  s.dt_prev = dt;
  s.t = t1;
  ++s.steps;
  Monitor mon = measure(s);
  mon.dissipation = 2 * diss;
  s.monitor.push_back(mon);
}

void step_physical(EvolutionState& s, double dt) {
  if (s.chart != Chart::Physical) throw Error(Errc::InvalidArgument, "state is in the self-similar chart");
  step(s, dt);
}

void step_selfsimilar(EvolutionState& s, double dsigma) {
  if (s.chart != Chart::SelfSimilar) throw Error(Errc::InvalidArgument, "state is in the physical chart");
  step(s, dsigma);
}

void advance(EvolutionState& s, double t_end, int n) {
  double t0 = s.t;
  for (int i = 1; i <= n; ++i) step(s, t0 + (t_end - t0) * i / n - s.t);
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  size_t i = std::upper_bound(x.begin(), x.end(), at) - x.begin() - 1;
  double u = (at - x[i]) / (x[i + 1] - x[i]);
  return (1 - u) * y[i] + u * y[i + 1];
}

EnergyReport energy_monitor(const EvolutionState& s) {
  EnergyReport rep;
  const auto& m = s.monitor;
  double cumulative = 0;
  for (const auto& x : m) rep.scale = std::max(rep.scale, std::abs(x.energy));
  for (size_t i = 1; i < m.size(); ++i) {
    rep.max_increase = std::max(rep.max_increase, m[i].energy - m[i - 1].energy);
    cumulative += m[i].dissipation * (m[i].t - m[i - 1].t);
    rep.dissipation_residual =
        std::max(rep.dissipation_residual, std::abs(m[i].energy - m[0].energy + cumulative));
  }
  rep.non_increasing = rep.max_increase <= 1e-12 * std::max(1.0, rep.scale);
  return rep;
}

DissipationCheck dissipation_check(const EvolutionState& initial, double sigma_end, int n) {
  EvolutionState coarse = initial, fine = initial;
  advance(coarse, sigma_end, n);
  advance(fine, sigma_end, 2 * n);
  DissipationCheck c;
  c.coarse = energy_monitor(coarse);
  for (size_t i = 0; i < coarse.monitor.size(); ++i)
    c.scheme_error = std::max(c.scheme_error, std::abs(coarse.monitor[i].energy - fine.monitor[2 * i].energy));
  c.pass = c.coarse.non_increasing && c.coarse.dissipation_residual < 10 * c.scheme_error;
  return c;
}

namespace {

std::vector<double> consistency_run(const TargetSurfaceProfile& p, const Trajectory& psi, double t0, double t1,
                                    const std::vector<double>& r, int steps) {
  double L = psi.tail.limit;
  std::vector<double> h0(r.size());
  for (size_t i = 0; i < r.size(); ++i) h0[i] = (i == 0 ? psi.seed.s0 : profile_at(psi, r[i] / std::sqrt(t0))) - L;
  const auto& spec = psi.spec;
  EvolutionState s = make_state(Chart::Physical, spec.d, spec.k, r, h0, t0, full_source(p, L));
  double R = r.back();
  auto traj = std::make_shared<const Trajectory>(psi);
  s.outer = [traj, R, L](double t) { return profile_at(*traj, R / std::sqrt(t)) - L; };
  advance(s, t1, steps);
  for (double& v : s.f) v += L;
  return s.f;
}

}  // namespace

ConsistencyReport selfsimilar_consistency(const TargetSurfaceProfile& p, const Trajectory& psi, double t0,
                                          double t1, const ConsistencyOptions& opt) {
  if (!(t1 > t0) || !(t0 > 0)) throw Error(Errc::InvalidArgument, "need 0 < t0 < t1");
  std::vector<double> r = evolution_grid(40 * std::sqrt(t1), opt.q, opt.r_min);
  std::vector<double> rf = refine_grid(r);
  std::vector<double> hc = consistency_run(p, psi, t0, t1, r, opt.steps);
  std::vector<double> hf = consistency_run(p, psi, t0, t1, rf, 2 * opt.steps);
  ConsistencyReport rep;
  for (size_t i = 0; i < r.size(); ++i) {
    double exact = i == 0 ? psi.seed.s0 : profile_at(psi, r[i] / std::sqrt(t1));
    rep.error = std::max(rep.error, std::abs(hc[i] - exact));
    rep.estimate = std::max(rep.estimate, std::abs(hc[i] - hf[2 * i]));
  }
  for (size_t i = 0; i < rf.size(); ++i) {
    double exact = i == 0 ? psi.seed.s0 : profile_at(psi, rf[i] / std::sqrt(t1));
    rep.fine_error = std::max(rep.fine_error, std::abs(hf[i] - exact));
  }
  return rep;
}

PoleStabilityReport pole_stability_experiment(const TargetSurfaceProfile& p, const Eigenmap& e, double s_star,
                                              const std::function<double(double)>& f0, double horizon,
                                              const PoleOptions& opt) {
  PoleStabilityReport rep;
  double t0 = 0.0;
  Source src;
  std::function<double(double, double)> base;
  if (opt.background) {
    t0 = 1.0;
    src = background_source(p, *opt.background, Chart::Physical);
    auto traj = std::make_shared<const Trajectory>(*opt.background);
    base = [traj](double r, double t) { return profile_at(*traj, r / std::sqrt(t)); };
    double lo = INFINITY;
    for (double h : opt.background->h) lo = std::min(lo, p.dG(h));
    lo = std::min({lo, p.dG(opt.background->tail.limit), p.dG(opt.background->seed.s0)});
    rep.c = e.k * lo;
  } else {
    src = perturbation_source(p, s_star);
    base = [s_star](double, double) { return s_star; };
    rep.c = e.k * p.dG(s_star);
  }
  if (!(rep.c > 0)) throw Error(Errc::InvalidArgument, "pole experiment needs k G' > 0 along the base");

  std::vector<double> r = evolution_grid(40 * std::sqrt(t0 + horizon), opt.q);
  std::vector<double> u(r.size());
  for (size_t i = 0; i < r.size(); ++i) u[i] = i == 0 || i + 1 == r.size() ? 0.0 : f0(r[i]);
  rep.run = make_state(Chart::Physical, e.d, e.k, r, u, t0, src);
  rep.run.outer = [](double) { return 0.0; };
  rep.run.background = 0.0;

  auto track = [&](const EvolutionState& s) {
    double sup = 0, forcing = 0;
    for (size_t i = 0; i < s.r.size(); ++i) {
      sup = std::max(sup, std::abs(s.f[i]));
      if (s.f[i] == 0) continue;
      double b = base(s.r[i], s.t);
      double c_here = e.k * p.dG(b);
      forcing = std::max(forcing, std::abs(e.k * (p.G(b + s.f[i]) - p.G(b)) - c_here * s.f[i]));
    }
    rep.sup = std::max(rep.sup, sup);
    rep.forcing = std::max(rep.forcing, forcing);
  };
  for (double v : u) rep.f0_sup = std::max(rep.f0_sup, std::abs(v));
  track(rep.run);
  for (int i = 1; i <= opt.steps; ++i) {
    step(rep.run, t0 + horizon * i / opt.steps - rep.run.t);
    track(rep.run);
  }
  rep.bound = rep.f0_sup + rep.forcing / rep.c;
  rep.within_bound = rep.sup <= rep.bound * (1 + 1e-9) + 1e-300;
  return rep;
}

WeakEnergyReport weak_energy_inequality_check(const EvolutionState& run, double inf_dG, std::optional<double> C) {
  WeakEnergyReport rep;
  double dd = (run.d - 2) * (run.d - 2);
  double eps = run.k * inf_dG + 0.25 * dd;
  rep.applicable = eps > 0;
  if (C) {
    rep.C = *C;
  } else if (rep.applicable) {
    double theta = std::min(1.0, 4 * eps / dd);
    rep.C = 1 + 0.5 / theta;
  } else {
    rep.C = NAN;
  }
  const auto& m = run.monitor;
  double f0 = m.front().L2 * m.front().L2, sup = 0, integral = 0;
  for (size_t i = 0; i < m.size(); ++i) {
    sup = std::max(sup, m[i].L2 * m[i].L2);
    if (i > 0) integral += 0.5 * (m[i].dirichlet + m[i - 1].dirichlet) * (m[i].t - m[i - 1].t);
  }
  double lhs = sup + integral;
  if (f0 == 0) {
    rep.ratio = lhs == 0 ? 0.0 : INFINITY;
    rep.holds = lhs == 0;
    return rep;
  }
  rep.ratio = lhs / f0;
  rep.holds = std::isfinite(rep.C) && rep.ratio <= rep.C;
  return rep;
}

GrowthReport expander_slice_growth(const TargetSurfaceProfile& p, const Trajectory& psi, double s_star,
                                   double t0, double t1, int steps, double q) {
  std::vector<double> r = evolution_grid(40 * std::sqrt(t1), q);
  std::vector<double> f(r.size());
  for (size_t i = 0; i < r.size(); ++i)
    f[i] = (i == 0 ? psi.seed.s0 : profile_at(psi, r[i] / std::sqrt(t0))) - s_star;
  f.back() = 0.0;
  GrowthReport rep;
  rep.run = make_state(Chart::Physical, psi.spec.d, psi.spec.k, r, f, t0, perturbation_source(p, s_star));
  advance(rep.run, t1, steps);
  rep.growth = rep.run.monitor.back().L2 / rep.run.monitor.front().L2;
  return rep;
}

std::string run_log_csv(const EvolutionState& s) {
  std::ostringstream os;
  os << "t,L2,Linf,Ebar\n";
  char buf[128];
  for (const auto& m : s.monitor) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", m.t, m.L2, m.Linf,
                  s.chart == Chart::SelfSimilar ? m.energy : NAN);
    os << buf;
  }
  return os.str();
}

std::string snapshot_csv(const EvolutionState& s) {
  std::ostringstream os;
  os << "r,h\n";
  char buf[64];
  for (size_t i = 0; i < s.r.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.r[i], s.source.base + s.f[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace hmhf
