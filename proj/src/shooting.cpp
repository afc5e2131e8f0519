#include "hmhf/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hmhf/numerics.hpp"
#include "hmhf/ode.hpp"

namespace hmhf {

int effective_dimension(const ShootSpec& s) {
  return s.eq == Equation::GeneralDimension && s.D > 0 ? s.D : s.d;
}

double local_exponent(int d, double k, double dG0) {
  if (!(dG0 > 0)) throw Error(Errc::NonMinimalBase, "G'(s0) = " + std::to_string(dG0));
  double disc = (d - 2.0) * (d - 2.0) + 4 * k * dG0;
  return 0.5 * (std::sqrt(disc) - (d - 2.0));
}

double SeriesSeed::h(double r) const {
  double rg = std::pow(r, gamma);
  return s0 + a * rg * (1 + c2 * r * r) + b * rg * rg + c * rg * rg * rg;
}

double SeriesSeed::dh(double r) const {
  double g = gamma, rg = std::pow(r, g);
  return (a * (g * rg + (g + 2) * c2 * rg * r * r) + 2 * g * b * rg * rg + 3 * g * c * rg * rg * rg) / r;
}

double SeriesSeed::d2h(double r) const {
  double g = gamma, rg = std::pow(r, g);
  return (a * (g * (g - 1) * rg + (g + 2) * (g + 1) * c2 * rg * r * r) + 2 * g * (2 * g - 1) * b * rg * rg +
          3 * g * (3 * g - 1) * c * rg * rg * rg) /
         (r * r);
}

SeriesSeed series_seed(const TargetSurfaceProfile& p, const ShootSpec& spec) {
  if (std::abs(p.G(spec.s0)) > 1e-8)
    throw Error(Errc::InvalidArgument, "s0 is not a critical level of g^2");
  int D = effective_dimension(spec);
  double k = spec.k;
  SeriesSeed s;
  s.s0 = spec.s0;
  s.a = spec.a;
  s.gamma = local_exponent(D, k, p.dG(spec.s0));
  double g = s.gamma, a = spec.a;
  double G2 = p.d2G(spec.s0), G3 = p.d3G(spec.s0);
  s.c2 = spec.eq == Equation::Expander ? -g / (4 * (2 * g + D)) : 0.0;
  s.b = k * G2 * a * a / (2 * g * (3 * g + D - 2));
  s.c = (k * G3 * a * a * a / 6 + k * G2 * a * s.b) / (2 * g * (4 * g + D - 2));

  auto correction = [&](double r) {
    if (a == 0.0) return 0.0;
    double rg = std::pow(r, g);
    return std::abs(s.c2) * r * r + std::abs(s.b / a) * rg + std::abs(s.c / a) * rg * rg;
  };
  double r0 = spec.r0;
  if (!(r0 > 0)) {
    r0 = 1e-2;
    if (s.c2 != 0.0) r0 = std::min(r0, std::sqrt(1e-6 / std::abs(s.c2)));
    if (a != 0.0) r0 = std::min(r0, 1e-3 * std::pow(std::abs(a), -1.0 / g));
  }
  s.r0 = r0;
  s.correction = correction(r0);
  if (s.correction > 0.1)
    throw Error(Errc::SeriesDivergence, "relative correction " + std::to_string(s.correction) + " at r0");
  return s;
}

namespace {

// Universal constant sup_{r>=1} r^4 e^{-r^2/4} int_1^r e^{s^2/4} s^{-3} ds, by RK4 on the scaled integral.
double tail_kappa() {
  static const double kappa = [] {
    auto f = [](double r, double J) { return -0.5 * r * J + 1 / (r * r * r); };
    double r = 1, J = 0, h = 1e-3, best = 0;
    while (r < 60) {
      double k1 = f(r, J), k2 = f(r + h / 2, J + h / 2 * k1), k3 = f(r + h / 2, J + h / 2 * k2),
             k4 = f(r + h, J + h * k3);
      J += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      r += h;
      best = std::max(best, r * r * r * r * J);
    }
    return best * (1 + 1e-6);
  }();
  return kappa;
}

double rhs_h2(double r, double h, double dh, double k, int D, bool expander, const TargetSurfaceProfile& p) {
  return -((D - 1) / r + (expander ? 0.5 * r : 0.0)) * dh + k * p.G(h) / (r * r);
}

}  // namespace

double derivative_bound_constant(const TargetSurfaceProfile& p, double k, double F1) {
  double C = 2 * k * k * p.sup_G() * p.sup_G();
  double peak = 64 * std::exp(-2.0);  // sup_{r>=1} r^4 e^{-r^2/4}
  return std::sqrt(std::exp(0.25) * std::max(F1, 0.0) * peak + C * tail_kappa());
}

double Trajectory::value(double x) const {
  if (x <= r.front()) return seed.h(x);
  if (x >= r.back()) return h.back();
  size_t i = std::upper_bound(r.begin(), r.end(), x) - r.begin() - 1;
  return quintic_hermite(r[i], r[i + 1], h[i], dh[i], ddh[i], h[i + 1], dh[i + 1], ddh[i + 1], x).value;
}

double Trajectory::deriv(double x) const {
  if (x <= r.front()) return seed.dh(x);
  if (x >= r.back()) return dh.back();
  size_t i = std::upper_bound(r.begin(), r.end(), x) - r.begin() - 1;
  return quintic_hermite(r[i], r[i + 1], h[i], dh[i], ddh[i], h[i + 1], dh[i + 1], ddh[i + 1], x).deriv;
}

TailEstimate estimate_tail_limit(const TargetSurfaceProfile& p, const Trajectory& t) {
  if (!t.bounded) throw Error(Errc::Unbounded, "trajectory left the compact coordinate range");
  TailEstimate e;
  double R = t.r.back();
  e.raw = t.h.back();
  if (t.spec.a == 0.0) {
    e.limit = e.raw;
    e.bound = 0.0;
    return e;
  }
  if (t.spec.eq != Equation::Expander) {
    e.limit = e.raw;
    e.bound = INFINITY;
    return e;
  }
  e.bound = t.Cbar / (2 * R * R);
  double k = t.spec.k, d = t.D, x = 1 / (R * R);
  double L = e.raw;
  for (int it = 0; it < 50; ++it) {
    double G0 = p.G(L), G1 = p.dG(L), G2 = p.d2G(L), G3 = p.d3G(L);
    double A1 = -G0 * k;
    double A2 = G0 * k * (G1 * k + 2 * d - 8) / 2;
    double A3 = -G0 * k *
                (G0 * G2 * k * k + G1 * G1 * k * k + 6 * G1 * d * k - 32 * G1 * k + 8 * d * d - 80 * d + 192) / 6;
    double A4 = G0 * k *
                (G0 * G0 * G3 * k * k * k + 4 * G0 * G1 * G2 * k * k * k + 12 * G0 * G2 * d * k * k -
                 72 * G0 * G2 * k * k + G1 * G1 * G1 * k * k * k + 12 * G1 * G1 * d * k * k - 80 * G1 * G1 * k * k +
                 44 * G1 * d * d * k - 560 * G1 * d * k + 1728 * G1 * k + 48 * d * d * d - 864 * d * d + 4992 * d -
                 9216) /
                24;
    double Ln = e.raw - (((A4 * x + A3) * x + A2) * x + A1) * x;
    bool done = std::abs(Ln - L) < 1e-15;
    L = Ln;
    if (done) break;
  }
  e.limit = L;
  return e;
}

Trajectory integrate(const TargetSurfaceProfile& p, const ShootSpec& spec) {
  if (!(spec.r_max > 0) || !(spec.rtol > 0) || !(spec.atol > 0))
    throw Error(Errc::InvalidArgument, "r_max and tolerances must be positive");
  Trajectory t;
  t.spec = spec;
  t.D = effective_dimension(spec);
  t.seed = series_seed(p, spec);
  const int D = t.D;
  const double k = spec.k;
  const bool expander = spec.eq == Equation::Expander;
  const Domain& dom = p.domain();
  const double half = dom.periodic ? 0.5 * dom.period : INFINITY;
  if (!(spec.r_max > t.seed.r0)) throw Error(Errc::InvalidArgument, "r_max must exceed r0");

  auto push = [&](double r, double h, double dh) {
    if (!dom.periodic && (h < dom.lo || h > dom.hi))
      throw Error(Errc::BlowUp, "h = " + std::to_string(h) + " at r = " + std::to_string(r));
    if (!std::isfinite(h) || !std::isfinite(dh)) throw Error(Errc::StepFailure, "non-finite state");
    t.r.push_back(r);
    t.h.push_back(h);
    t.dh.push_back(dh);
    t.ddh.push_back(rhs_h2(r, h, dh, k, D, expander, p));
  };

  if (spec.a == 0.0) {
    for (double r : {t.seed.r0, spec.r_max}) {
      t.r.push_back(r);
      t.h.push_back(spec.s0);
      t.dh.push_back(0.0);
      t.ddh.push_back(0.0);
    }
    t.sup_h = spec.s0;
    t.tail = TailEstimate{spec.s0, spec.s0, 0.0};
    t.Cbar = derivative_bound_constant(p, k, k * p.sup_g() * p.sup_g());
    return t;
  }

  OdeOptions opt;
  opt.rtol = spec.rtol;
  opt.atol = spec.atol;

  // Near the origin: tau = log r, state (h, r h').
  double r0 = t.seed.r0;
  double r_switch = expander ? std::min(2.0, spec.r_max) : spec.r_max;
  auto f_log = [&](double tau, const State<2>& y) -> State<2> {
    double r = std::exp(tau);
    double drag = (D - 2) + (expander ? 0.5 * r * r : 0.0);
    return {y[1], -drag * y[1] + k * p.G(y[0])};
  };
  State<2> y0{t.seed.h(r0), r0 * t.seed.dh(r0)};
  double tau_end = std::log(r_switch);
  opt.hmax = 0.05;
  dopri5<2>(f_log, std::log(r0), y0, tau_end, opt, [&](double tau, const State<2>& y, const State<2>&) {
    double r = (tau == tau_end) ? r_switch : std::exp(tau);
    push(r, y[0], y[1] / r);
    return true;
  });

  // Outer region: state (h, h').
  auto f_lin = [&](double r, const State<2>& y) -> State<2> {
    return {y[1], rhs_h2(r, y[0], y[1], k, D, expander, p)};
  };
  auto run_outer = [&](double r_end) {
    double ra = t.r.back();
    if (!(r_end > ra)) return;
    State<2> ya{t.h.back(), t.dh.back()};
    opt.hmax = 0.5;
    bool first = true;
    dopri5<2>(f_lin, ra, ya, r_end, opt, [&](double r, const State<2>& y, const State<2>&) {
      if (first) {
        first = false;
        return true;
      }
      push(r, y[0], y[1]);
      return true;
    });
  };
  run_outer(spec.r_max);

  auto last_turn = [&] {
    double last = 0;
    for (size_t i = 1; i < t.r.size(); ++i)
      if ((t.dh[i] > 0) != (t.dh[i - 1] > 0) && t.dh[i - 1] != 0.0) last = t.r[i];
    return last;
  };
  t.regular_seed = t.seed.gamma > 0;
  double F1 = k * p.sup_g() * p.sup_g();
  t.Cbar = derivative_bound_constant(p, k, F1);
  if (expander && spec.extend) {
    double need = std::max({1.0, 2 * last_turn(), std::sqrt(t.Cbar / (2 * spec.limit_tol))});
    if (need > t.r.back()) run_outer(std::min(need * 1.01, spec.r_max_cap));
  }

  t.sup_h = *std::max_element(t.h.begin(), t.h.end());
  double dev = 0;
  for (double v : t.h) dev = std::max(dev, std::abs(v - spec.s0));
  t.bounded = dev <= half;
  t.extrema = 0;
  for (size_t i = 1; i < t.dh.size(); ++i)
    if (t.dh[i - 1] != 0.0 && t.dh[i] != 0.0 && (t.dh[i] > 0) != (t.dh[i - 1] > 0)) ++t.extrema;
  if (t.bounded) t.tail = estimate_tail_limit(p, t);
  return t;
}

MonotoneSeries monotone_quantities(const TargetSurfaceProfile& p, const Trajectory& t) {
  MonotoneSeries m;
  double k = t.spec.k;
  double scale = std::max(k * p.sup_g() * p.sup_g(), 1e-300);
  size_t n = t.r.size();
  m.r = t.r;
  m.V.resize(n);
  m.Vtilde.resize(n);
  m.F.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double r = t.r[i], hp = t.dh[i], g = p.g(t.h[i]);
    m.F[i] = r * r * hp * hp;
    m.V[i] = m.F[i] - k * g * g;
    m.Vtilde[i] = std::pow(r, 2 * (t.D - 2)) * m.V[i];
  }
  for (size_t i = 1; i < n; ++i) {
    m.max_V_increment = std::max(m.max_V_increment, (m.V[i] - m.V[i - 1]) / scale);
    double s = std::max({std::abs(m.Vtilde[i]), std::abs(m.Vtilde[i - 1]), 1e-300});
    m.max_Vtilde_increment = std::max(m.max_Vtilde_increment, (m.Vtilde[i] - m.Vtilde[i - 1]) / s);
  }
  return m;
}

double divergence_residual(const TargetSurfaceProfile& p, const Trajectory& t) {
  const int D = t.D;
  const double k = t.spec.k;
  const double eps = t.spec.eq == Equation::Expander ? 1.0 : 0.0;
  double worst = 0;
  for (size_t i = 0; i + 1 < t.r.size(); ++i) {
    double a = t.r[i], b = t.r[i + 1];
    // W(r) = r^{D-1} e^{eps r^2/4} h', all divided by b^{D-2} e^{eps b^2/4}
    auto scaled = [&](double r) { return std::pow(r / b, D - 2) * std::exp(eps * (r * r - b * b) / 4); };
    double Wa = scaled(a) * a * t.dh[i];
    double Wb = b * t.dh[i + 1];
    double src = gauss5(
        [&](double r) {
          double h = quintic_hermite(a, b, t.h[i], t.dh[i], t.ddh[i], t.h[i + 1], t.dh[i + 1], t.ddh[i + 1], r).value;
          return k * scaled(r) * p.G(h) / r;
        },
        a, b);
    worst = std::max(worst, std::abs(Wb - Wa - src));
  }
  return worst;
}

bool energy_space_check(const TargetSurfaceProfile& p, const Trajectory& t) {
  const int D = t.D;
  size_t n = t.r.size();
  std::vector<double> I(n);
  for (size_t i = 0; i < n; ++i) {
    double r = t.r[i];
    I[i] = (t.dh[i] * t.dh[i] + t.h[i] * t.h[i] / (r * r)) * std::pow(r, D - 1);
    if (!std::isfinite(I[i])) return false;
  }
  if (!std::isfinite(trapezoid(t.r, I))) return false;
  // Local power of the integrand over the innermost decade must exceed -1.
  std::vector<double> lx, ly;
  for (size_t i = 0; i < n && t.r[i] <= 10 * t.r[0]; ++i) {
    if (I[i] <= 0) continue;
    lx.push_back(std::log(t.r[i]));
    ly.push_back(std::log(I[i]));
  }
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= lx.size();
    my /= lx.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    if (sxx > 0 && sxy / sxx <= -0.95) return false;
  }
  for (size_t i = 0; i < n; ++i) {
    double r = t.r[i];
    if (r >= 1 && std::abs(t.dh[i]) * r * r * r > t.Cbar * (1 + 1e-9)) return false;
  }
  (void)p;
  return true;
}

std::string trajectory_csv(const TargetSurfaceProfile& p, const Trajectory& t) {
  MonotoneSeries m = monotone_quantities(p, t);
  std::ostringstream os;
  os << "r,h,dh,V,Vtilde\n";
  char buf[160];
  for (size_t i = 0; i < t.r.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", t.r[i], t.h[i], t.dh[i], m.V[i],
                  m.Vtilde[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace hmhf
