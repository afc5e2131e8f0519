#include "hmhf/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hmhf/numerics.hpp"
#include "hmhf/ode.hpp"

namespace hmhf {

double LinearizedProblem::kdG(double rho) const { return k * profile->dG(psi.value(rho)); }
double LinearizedProblem::q(double rho) const { return kdG(rho) / (rho * rho); }

namespace {

void set_exponents(LinearizedProblem& lp) {
  double c = lp.k * lp.profile->dG(lp.psi.seed.s0);
  double disc = (lp.d - 2.0) * (lp.d - 2.0) + 4 * c;
  if (disc < 0) throw Error(Errc::NonMinimalBase, "complex origin exponents");
  lp.gamma1 = 0.5 * (-(lp.d - 2.0) - std::sqrt(disc));
  lp.gamma2 = 0.5 * (-(lp.d - 2.0) + std::sqrt(disc));
}

Quintic interp(const EigenSolution& s, size_t i, double x) {
  return quintic_hermite(s.rho[i], s.rho[i + 1], s.v[i], s.dv[i], s.ddv[i], s.v[i + 1], s.dv[i + 1], s.ddv[i + 1], x);
}

}  // namespace

LinearizedProblem make_problem(const TargetSurfaceProfile& p, const Trajectory& psi, double rho_max) {
  if (!(rho_max > 0)) throw Error(Errc::InvalidArgument, "rho_max must be positive");
  LinearizedProblem lp;
  lp.profile = &p;
  lp.psi = psi;
  lp.d = psi.D;
  lp.k = psi.spec.k;
  lp.rho_max = rho_max;
  lp.rho0 = std::min(1e-4, psi.r.front());
  set_exponents(lp);
  return lp;
}

LinearizedProblem constant_problem(const TargetSurfaceProfile& p, int d, double k, double s0, double rho_max) {
  ShootSpec s;
  s.d = d;
  s.k = k;
  s.s0 = s0;
  s.a = 0.0;
  s.r_max = std::max(rho_max, 20.0);
  return make_problem(p, integrate(p, s), rho_max);
}

double EigenSolution::value(double x) const {
  if (x <= rho.front()) return v.front() * std::pow(x / rho.front(), dv.front() * rho.front() / v.front());
  if (x >= rho.back()) return v.back();
  size_t i = std::upper_bound(rho.begin(), rho.end(), x) - rho.begin() - 1;
  return interp(*this, i, x).value;
}

double EigenSolution::deriv(double x) const {
  if (x <= rho.front()) return dv.front();
  if (x >= rho.back()) return dv.back();
  size_t i = std::upper_bound(rho.begin(), rho.end(), x) - rho.begin() - 1;
  return interp(*this, i, x).deriv;
}

EigenSolution solve_EF(const LinearizedProblem& lp, double E) {
  EigenSolution s;
  s.E = E;
  const int d = lp.d;
  // tau = log rho, v = R sin(theta), rho v' = R cos(theta); state (theta, log R).
  auto f = [&](double tau, const State<2>& y) -> State<2> {
    double r = std::exp(tau);
    double B = d - 2 + 0.5 * r * r, C = lp.kdG(r) - E * r * r;
    double sn = std::sin(y[0]), cs = std::cos(y[0]);
    return {cs * cs + B * sn * cs - C * sn * sn, sn * cs * (1 + C) - B * cs * cs};
  };
  double r0 = lp.rho0, g = lp.gamma2;
  double v0 = std::pow(r0, g) / (1 + g);
  State<2> y0{std::atan2(1.0, g), std::log(v0 * std::hypot(1.0, g))};
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-12;
  opt.hmax = 0.05;
  opt.hmax_at = [&](double tau) {
    double r = std::exp(tau);
    return 0.25 * 2 * M_PI / std::sqrt(std::max(std::abs(E - lp.q(r)), 1.0)) / r;
  };
  double tau1 = std::log(lp.rho_max);
  std::vector<double>& logR = s.logR;
  dopri5<2>(f, std::log(r0), y0, tau1, opt, [&](double tau, const State<2>& y, const State<2>&) {
    s.rho.push_back(tau == tau1 ? lp.rho_max : std::exp(tau));
    s.theta.push_back(y[0]);
    logR.push_back(y[1]);
    return true;
  });
  s.log_scale = *std::max_element(logR.begin(), logR.end());
  size_t n = s.rho.size();
  s.v.resize(n);
  s.dv.resize(n);
  s.ddv.resize(n);
  for (size_t i = 0; i < n; ++i) {
    logR[i] -= s.log_scale;
    double r = s.rho[i], R = std::exp(logR[i]);
    s.v[i] = R * std::sin(s.theta[i]);
    s.dv[i] = R * std::cos(s.theta[i]) / r;
    s.ddv[i] = -((d - 1) / r + 0.5 * r) * s.dv[i] + (lp.q(r) - E) * s.v[i];
  }
  return s;
}

int count_zeros(const EigenSolution& s) {
  // theta starts in (0, pi/2) and crosses each multiple of pi upwards exactly when v vanishes.
  double t = s.theta.back() / M_PI;
  if (std::abs(t - std::round(t)) < 1e-12 && std::round(t) >= 1)
    throw Error(Errc::TangencySuspected, "solution vanishes at rho_max");
  return static_cast<int>(std::floor(t));
}

int eigenvalue_count_below(const LinearizedProblem& lp, double E0) { return count_zeros(solve_EF(lp, E0)); }

double form_lower_bound(const LinearizedProblem& lp) {
  double m = 0.0;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    double r = lp.rho0 * std::pow(lp.rho_max / lp.rho0, double(i) / n);
    m = std::min(m, lp.q(r));
  }
  // A crude inf q from a deep well is useless; the zero count is exact below the spectrum.
  double E = std::max(m, -1.0) - 1.0;
  while (eigenvalue_count_below(lp, E) > 0) E = 2 * E - 1;
  return E;
}

std::vector<Eigenpair> find_eigenvalues(const LinearizedProblem& lp, double E_lo, double E_hi, double tol) {
  if (!(E_lo < E_hi)) throw Error(Errc::InvalidArgument, "E_lo must be below E_hi");
  std::vector<Eigenpair> out;
  std::function<void(double, double, int, int)> isolate = [&](double a, double b, int na, int nb) {
    if (nb <= na) return;
    if (nb - na == 1) {
      while (b - a > tol * std::max(1.0, std::abs(b))) {
        double m = 0.5 * (a + b);
        if (eigenvalue_count_below(lp, m) <= na) a = m;
        else b = m;
      }
      out.push_back({0.5 * (a + b), a, b, na});
      return;
    }
    double m = 0.5 * (a + b);
    if (b - a < tol) {  // unresolved cluster; report it once per missing index
      for (int j = na; j < nb; ++j) out.push_back({m, a, b, j});
      return;
    }
    int nm = eigenvalue_count_below(lp, m);
    isolate(a, m, na, nm);
    isolate(m, b, nm, nb);
  };
  isolate(E_lo, E_hi, eigenvalue_count_below(lp, E_lo), eigenvalue_count_below(lp, E_hi));
  std::sort(out.begin(), out.end(), [](const Eigenpair& x, const Eigenpair& y) { return x.lambda < y.lambda; });
  return out;
}

double rayleigh_quotient(const LinearizedProblem& lp, const EigenSolution& s) {
  const int d = lp.d;
  const double E = s.E;
  size_t n = s.rho.size();
  // log of |v| sqrt(mu), from the amplitude so that deep eigenfunctions do not underflow.
  auto lw = [&](size_t i) {
    double r = s.rho[i];
    return s.logR[i] + std::log(std::abs(std::sin(s.theta[i])) + 1e-300) + r * r / 8 + 0.5 * (d - 1) * std::log(r);
  };
  size_t last_zero = 0;
  for (size_t i = 0; i + 1 < n; ++i)
    if (std::floor(s.theta[i + 1] / M_PI) > std::floor(s.theta[i] / M_PI)) last_zero = i + 1;
  // Cut where |v| sqrt(mu) has decayed most relative to its running maximum; beyond that point the
  // non-decaying branch left by round-off takes over.
  size_t cut = n - 1;
  double best = INFINITY, run = -INFINITY, shift = -INFINITY;
  for (size_t i = last_zero; i < n; ++i) {
    run = std::max(run, lw(i));
    if (lw(i) - run < best) best = lw(i) - run, cut = i;
  }
  for (size_t i = 0; i <= cut; ++i) shift = std::max(shift, lw(i));
  double num = 0, den = 0;
  for (size_t i = 0; i < cut; ++i) {
    // Hermite data on this step, scaled by the amplitude at its left end.
    double a = s.rho[i], b = s.rho[i + 1];
    double fb = std::exp(s.logR[i + 1] - s.logR[i]);
    double va = std::sin(s.theta[i]), vb = fb * std::sin(s.theta[i + 1]);
    double da = std::cos(s.theta[i]) / a, db = fb * std::cos(s.theta[i + 1]) / b;
    double sa = -((d - 1) / a + 0.5 * a) * da + (lp.q(a) - E) * va;
    double sb = -((d - 1) / b + 0.5 * b) * db + (lp.q(b) - E) * vb;
    double base = 2 * s.logR[i] - 2 * shift;
    auto w = [&](double r) { return std::exp(base + r * r / 4 + (d - 1) * std::log(r)); };
    num += gauss5(
        [&](double r) {
          Quintic v = quintic_hermite(a, b, va, da, sa, vb, db, sb, r);
          return (v.deriv * v.deriv + lp.q(r) * v.value * v.value) * w(r);
        },
        a, b);
    den += gauss5(
        [&](double r) {
          double v = quintic_hermite(a, b, va, da, sa, vb, db, sb, r).value;
          return v * v * w(r);
        },
        a, b);
  }
  return num / den;
}

int extremum_count(const Trajectory& t) { return t.extrema; }

TranslationCheck translation_mode_check(const LinearizedProblem& lp) {
  const Trajectory& psi = lp.psi;
  double sup_dh = 0;
  for (double v : psi.dh) sup_dh = std::max(sup_dh, std::abs(v));
  if (psi.spec.a == 0.0 || sup_dh == 0.0) throw Error(Errc::DegenerateMode, "profile is constant");
  TranslationCheck tc;
  EigenSolution v1 = solve_EF(lp, 1.0);
  tc.zeros = count_zeros(v1);
  tc.extrema = extremum_count(psi);

  double hi = 0.5 * lp.rho_max;
  std::vector<double> a, b;
  for (size_t i = 0; i < v1.rho.size() && v1.rho[i] <= hi; ++i) {
    double r = v1.rho[i];
    a.push_back(v1.v[i]);
    b.push_back(r * psi.deriv(r));
  }
  auto supn = [](const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
  };
  double na = supn(a), nb = supn(b), dot = 0;
  for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  double sg = dot < 0 ? -1.0 : 1.0;
  for (size_t i = 0; i < a.size(); ++i) tc.residual = std::max(tc.residual, std::abs(a[i] / na - sg * b[i] / nb));

  // (A - 1)(rho psi') with psi''' from the differentiated profile equation.
  const int d = lp.d;
  const double k = lp.k;
  const auto& P = *lp.profile;
  double sup_w = 0, sup_res = 0;
  for (size_t i = 0; i < psi.size() && psi.r[i] <= hi; ++i) {
    double r = psi.r[i], h = psi.h[i], h1 = psi.dh[i], h2 = psi.ddh[i];
    double c = (d - 1) / r + 0.5 * r;
    double h3 = ((d - 1) / (r * r) - 0.5) * h1 - c * h2 + k * P.dG(h) * h1 / (r * r) - 2 * k * P.G(h) / (r * r * r);
    double w = r * h1, w1 = h1 + r * h2, w2 = 2 * h2 + r * h3;
    double res = -w2 - c * w1 + (k * P.dG(h) / (r * r) - 1.0) * w;
    sup_w = std::max(sup_w, std::abs(w));
    sup_res = std::max(sup_res, std::abs(res));
  }
  tc.A_residual = sup_res / sup_w;
  return tc;
}

DecayReport decay_exponent(const LinearizedProblem& lp) {
  DecayReport r;
  r.n_below_one = eigenvalue_count_below(lp, 1.0);
  double base = 0.5 * lp.d - 2.0;
  if (r.n_below_one == 0) {
    r.exponents.push_back(base);
    return r;
  }
  for (const Eigenpair& e : find_eigenvalues(lp, form_lower_bound(lp), 1.0)) {
    r.eigenvalues.push_back(e.lambda);
    r.gammas.push_back(1.0 - e.lambda);
    r.exponents.push_back(1.0 - e.lambda + base);
  }
  r.growing = true;
  for (double x : r.exponents) r.growing = r.growing && x > 0;
  return r;
}

SpectralReport spectral_report(const LinearizedProblem& lp, double threshold, double E_hi) {
  SpectralReport r;
  r.threshold = threshold;
  r.zero_count = eigenvalue_count_below(lp, threshold);
  for (const Eigenpair& e : find_eigenvalues(lp, form_lower_bound(lp), E_hi)) r.eigenvalues.push_back(e.lambda);
  if (lp.psi.spec.a != 0.0) r.translation_residual = translation_mode_check(lp).residual;
  return r;
}

}  // namespace hmhf
