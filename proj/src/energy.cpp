#include "hmhf/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Sparse>

#include "hmhf/numerics.hpp"
#include "hmhf/parallel.hpp"

namespace hmhf {

double RadialField::value(double x) const {
  if (x <= r.front()) return f.front();
  if (x >= r.back()) return x > support ? 0.0 : f.back();
  size_t i = std::upper_bound(r.begin(), r.end(), x) - r.begin() - 1;
  double t = (x - r[i]) / (r[i + 1] - r[i]);
  return (1 - t) * f[i] + t * f[i + 1];
}

std::vector<double> energy_grid(double R, int n, double r_geo) {
  if (n < 16 || !(R > 1) || !(r_geo > 0 && r_geo < 1)) throw Error(Errc::InvalidArgument, "bad energy grid");
  int ng = n / 8;
  int nu = n - 1 - ng;  // uniform intervals on [1, R]
  std::vector<double> r{0.0};
  for (int i = 0; i < ng; ++i) r.push_back(r_geo * std::pow(1 / r_geo, double(i) / ng));
  for (int i = 0; i <= nu; ++i) r.push_back(1 + (R - 1) * double(i) / nu);
  return r;
}

RadialField sample(const std::vector<double>& r, double (*fn)(double)) {
  RadialField f;
  f.r = r;
  for (double x : r) f.f.push_back(fn(x));
  return f;
}

namespace {

// Segment weights int r^{d-1} e^{lambda r^2/4} and nodal masses for the 1/r^2 term.
struct Quadrature {
  std::vector<double> W;   // per segment
  std::vector<double> m;   // per node: trapezoid width * r^{d-3} e^{lambda r^2/4}
  std::vector<double> mu;  // per node: trapezoid width * r^{d-1} e^{lambda r^2/4}
};

Quadrature quadrature(const std::vector<double>& r, int d, double lambda) {
  size_t n = r.size();
  Quadrature q;
  q.W.resize(n - 1);
  q.m.assign(n, 0.0);
  q.mu.assign(n, 0.0);
  for (size_t i = 0; i + 1 < n; ++i) {
    q.W[i] = gauss5([&](double x) { return std::pow(x, d - 1) * std::exp(lambda * x * x / 4); }, r[i], r[i + 1]);
    double half = 0.5 * (r[i + 1] - r[i]);
    for (size_t j : {i, i + 1}) {
      double e = std::exp(lambda * r[j] * r[j] / 4);
      q.m[j] += half * std::pow(r[j], d - 3) * e;
      q.mu[j] += half * std::pow(r[j], d - 1) * e;
    }
  }
  return q;
}

// s + f rounds away the low bits of a small f; the rounding error is put back to first order so
// that fields near a constant s are resolved below the spacing of doubles at s.
struct Shifted {
  double x, err;
};
Shifted shifted(double s, double f) {
  double x = s + f, bs = x - f;
  return {x, (s - bs) + (f - (x - bs))};
}
double g_at(const TargetSurfaceProfile& p, double s, double f) {
  Shifted a = shifted(s, f);
  return p.g(a.x) + p.dg(a.x) * a.err;
}
double G_at(const TargetSurfaceProfile& p, double s, double f) {
  Shifted a = shifted(s, f);
  return p.G(a.x) + p.dG(a.x) * a.err;
}
double dG_at(const TargetSurfaceProfile& p, double s, double f) {
  Shifted a = shifted(s, f);
  return p.dG(a.x) + p.d2G(a.x) * a.err;
}

// Differences of nearly equal nodal values carry an absolute rounding error of a few ulps.
double difference_floor(const std::vector<double>& f, size_t i) {
  double a = std::max({std::abs(f[i - 1]), std::abs(f[i]), std::abs(f[i + 1])});
  return 4 * std::numeric_limits<double>::epsilon() * a;
}

std::vector<double> residual_of(const RadialField& x, double s_star, int d, double k,
                                const TargetSurfaceProfile& p) {
  Quadrature q = quadrature(x.r, d, 1.0);
  size_t n = x.r.size();
  std::vector<double> res(n, 0.0);
  for (size_t i = 1; i + 1 < n; ++i) {
    double fl = q.W[i - 1] * (x.f[i] - x.f[i - 1]) / std::pow(x.r[i] - x.r[i - 1], 2);
    double fr = q.W[i] * (x.f[i + 1] - x.f[i]) / std::pow(x.r[i + 1] - x.r[i], 2);
    double pot = k * q.m[i] * G_at(p, s_star, x.f[i]);
    double cl = q.W[i - 1] / std::pow(x.r[i] - x.r[i - 1], 2), cr = q.W[i] / std::pow(x.r[i + 1] - x.r[i], 2);
    double noise = (cl + cr + k * q.m[i] * std::abs(dG_at(p, s_star, x.f[i]))) * difference_floor(x.f, i);
    double excess = std::max(0.0, std::abs(fl - fr + pot) - noise);
    res[i] = std::copysign(excess, fl - fr + pot) / std::max(q.mu[i], std::abs(fl) + std::abs(fr) + std::abs(pot));
  }
  return res;
}

void check_field(const RadialField& f) {
  if (f.r.size() < 2 || f.r.size() != f.f.size()) throw Error(Errc::InvalidArgument, "field grid mismatch");
  for (size_t i = 0; i < f.r.size(); ++i) {
    if (!std::isfinite(f.f[i])) throw Error(Errc::DivergentQuadrature, "non-finite field value");
    if (i > 0 && !(f.r[i] > f.r[i - 1])) throw Error(Errc::InvalidArgument, "grid must increase");
  }
  if (f.r.front() < 0) throw Error(Errc::InvalidArgument, "negative radius");
}

// g(s* + f) - g(s*) without cancellation for small f.
double g_increment(const TargetSurfaceProfile& p, const Jet& j, double s_star, double f) {
  if (std::abs(f) > 1e-3) return g_at(p, s_star, f) - j[0];
  return f * (j[1] + f * (j[2] / 2 + f * (j[3] / 6 + f * j[4] / 24)));
}

// Optionally reports the sum of absolute contributions, which sets the round-off level of the result.
double energy_sum(const RadialField& f, const Quadrature& q, double s_star, double k, const TargetSurfaceProfile& p,
                  double* magnitude = nullptr) {
  Jet j = p.jet(s_star);
  double e = 0, a = 0;
  for (size_t i = 0; i + 1 < f.r.size(); ++i) {
    double s = (f.f[i + 1] - f.f[i]) / (f.r[i + 1] - f.r[i]);
    e += s * s * q.W[i];
    a += s * s * q.W[i];
  }
  for (size_t i = 0; i < f.r.size(); ++i) {
    double dg = g_increment(p, j, s_star, f.f[i]);
    double t = k * q.m[i] * dg * (dg + 2 * j[0]);
    e += t;
    a += std::abs(t);
  }
  if (magnitude) *magnitude = a;
  return e;
}

}  // namespace

double dirichlet_energy(const RadialField& h, int d, double k, const TargetSurfaceProfile& p) {
  check_field(h);
  size_t n = h.r.size();
  // Integrand density near the inner end must decay slower than 1/r for the integral to exist.
  if (h.r.front() > 0) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i + 1 < n && h.r[i] <= 10 * h.r.front(); ++i) {
      double a = h.r[i], b = h.r[i + 1], s = (h.f[i + 1] - h.f[i]) / (b - a), g = p.g(h.f[i]);
      double dens = s * s * std::pow(a, d - 1) + k * g * g * std::pow(a, d - 3);
      if (dens <= 0) continue;
      lx.push_back(std::log(a));
      ly.push_back(std::log(dens));
    }
    if (lx.size() >= 2) {
      double slope = (ly.back() - ly.front()) / (lx.back() - lx.front());
      if (slope <= -0.95) throw Error(Errc::DivergentQuadrature, "energy density not integrable at the origin");
    }
  }
  double grad = 0, pot = 0;
  for (size_t i = 0; i + 1 < n; ++i) {
    double a = h.r[i], b = h.r[i + 1], s = (h.f[i + 1] - h.f[i]) / (b - a);
    grad += s * s * (std::pow(b, d) - std::pow(a, d)) / d;
  }
  for (size_t i = 0; i < n; ++i) {
    double w = 0.5 * ((i > 0 ? h.r[i] - h.r[i - 1] : 0) + (i + 1 < n ? h.r[i + 1] - h.r[i] : 0));
    double g = p.g(h.f[i]);
    pot += w * k * g * g * std::pow(h.r[i], d - 3);
  }
  double e = 0.5 * sphere_measure(d) * (grad + pot);
  if (!std::isfinite(e)) throw Error(Errc::DivergentQuadrature, "energy is not finite");
  return e;
}

double weighted_energy(const RadialField& f, double s_star, int d, double k, const TargetSurfaceProfile& p,
                       double lambda) {
  check_field(f);
  double e = energy_sum(f, quadrature(f.r, d, lambda), s_star, k, p);
  if (!std::isfinite(e)) throw Error(Errc::DivergentQuadrature, "weighted energy is not finite");
  return e;
}

ScalingCheck scaled_energy_identity(const RadialField& f, double lambda, double s_star, int d, double k,
                                    const TargetSurfaceProfile& p) {
  if (!(lambda > 0 && lambda <= 1)) throw Error(Errc::InvalidArgument, "lambda must lie in (0, 1]");
  ScalingCheck c;
  c.E_lambda = weighted_energy(f, s_star, d, k, p, lambda);
  RadialField g = f;  // g(r) = f(r / sqrt(lambda)) on the scaled grid
  double sl = std::sqrt(lambda);
  for (double& x : g.r) x *= sl;
  g.support = f.support * sl;
  c.E_bar_scaled = std::pow(lambda, -0.5 * (d - 2)) * weighted_energy(g, s_star, d, k, p, 1.0);
  c.residual = std::abs(c.E_lambda - c.E_bar_scaled) / std::max(std::abs(c.E_lambda), 1e-300);
  return c;
}

double energy_lower_bound(const RadialField& f, double R, double s_star, int d, double k,
                          const TargetSurfaceProfile& p) {
  check_field(f);
  Quadrature q = quadrature(f.r, d, 1.0);
  double C = k * p.sup_d2g2(), g0 = p.g(s_star);
  double grad = 0, tail = 0, CR = 0;
  for (size_t i = 0; i + 1 < f.r.size(); ++i) {
    double s = (f.f[i + 1] - f.f[i]) / (f.r[i + 1] - f.r[i]);
    grad += s * s * q.W[i];
  }
  for (size_t i = 0; i < f.r.size(); ++i) {
    if (f.r[i] >= R) tail += f.f[i] * f.f[i] * q.mu[i];
    else CR += k * g0 * g0 * q.m[i];
  }
  return grad - C / (R * R) * tail - CR;
}

std::vector<double> divergence_form_residual(const RadialField& h, int d, double k, const TargetSurfaceProfile& p) {
  check_field(h);
  return residual_of(h, 0.0, d, k, p);
}

namespace {

Minimizer descend(double s_star, int d, double k, const TargetSurfaceProfile& p, RadialField f,
                  const MinimizeOptions& opt) {
  Minimizer out;
  if (f.fixed_end) f.f.back() = 0.0;
  const size_t n = f.r.size();
  const size_t m = f.fixed_end ? n - 1 : n;  // unknowns
  Quadrature q = quadrature(f.r, d, 1.0);
  std::vector<double> c(n - 1);  // 2 W_i / h_i^2
  for (size_t i = 0; i + 1 < n; ++i) c[i] = 2 * q.W[i] / std::pow(f.r[i + 1] - f.r[i], 2);

  auto gradient = [&](const RadialField& x, Eigen::VectorXd& g) {
    g.setZero(m);
    for (size_t i = 0; i < m; ++i) {
      double v = 2 * k * q.m[i] * G_at(p, s_star, x.f[i]);
      if (i > 0) v += c[i - 1] * (x.f[i] - x.f[i - 1]);
      if (i + 1 < n) v -= c[i] * (x.f[i + 1] - x.f[i]);
      g[i] = v;
    }
  };
  // Gradient in units of f'', relative to the size of the balanced terms where those exceed one.
  // The part of the gradient within the rounding noise of f does not count.
  std::vector<double> sc(m, 1.0), noise(m, 0.0);
  auto scales = [&](const RadialField& x) {
    for (size_t i = 1; i < m && i + 1 < n; ++i) {
      double t = c[i - 1] * std::abs(x.f[i] - x.f[i - 1]) + c[i] * std::abs(x.f[i + 1] - x.f[i]) +
                 2 * k * q.m[i] * std::abs(G_at(p, s_star, x.f[i]));
      sc[i] = std::max(2 * q.mu[i], t);
      noise[i] = (c[i - 1] + c[i] + 2 * k * q.m[i] * std::abs(dG_at(p, s_star, x.f[i]))) * difference_floor(x.f, i);
    }
  };
  auto excess = [&](const Eigen::VectorXd& g, size_t i) { return std::max(0.0, std::abs(g[i]) - noise[i]) / sc[i]; };
  auto el = [&](const RadialField& x, const Eigen::VectorXd& g) {
    scales(x);
    double r = 0;
    for (size_t i = 1; i < m && i + 1 < n; ++i) r = std::max(r, excess(g, i));
    return r;
  };
  // Sum of squared residuals with the current scales; every node counts regardless of its weight.
  auto merit = [&](const Eigen::VectorXd& g) {
    double r = 0;
    for (size_t i = 1; i < m && i + 1 < n; ++i) r += excess(g, i) * excess(g, i);
    return r;
  };

  using SpMat = Eigen::SparseMatrix<double>;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;
  auto assemble = [&](const RadialField& x, bool safe) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(3 * m);
    for (size_t i = 0; i < m; ++i) {
      double curv = 2 * k * q.m[i] * dG_at(p, s_star, x.f[i]);
      double diag = (i > 0 ? c[i - 1] : 0) + (i + 1 < n ? c[i] : 0);
      diag += safe ? std::abs(curv) + 2 * q.mu[i] : curv;
      t.emplace_back(i, i, diag);
      if (i + 1 < m) {
        t.emplace_back(i, i + 1, -c[i]);
        t.emplace_back(i + 1, i, -c[i]);
      }
    }
    SpMat H(m, m);
    H.setFromTriplets(t.begin(), t.end());
    return H;
  };

  Eigen::VectorXd g, dir;
  double E = energy_sum(f, q, s_star, k, p);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    gradient(f, g);
    out.el_residual = el(f, g);
    if (out.el_residual < opt.tol) break;
    bool ok = false;
    for (bool safe : {false, true}) {
      SpMat H = assemble(f, safe);
      if (!analyzed) {
        ldlt.analyzePattern(H);
        analyzed = true;
      }
      ldlt.factorize(H);
      if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0) continue;
      dir = -ldlt.solve(g);
      ok = dir.dot(g) < 0;
      if (ok) break;
    }
    if (!ok) dir = -g;
    // Nodes with tiny weight barely constrain the energy; a cap on the largest move keeps them in place.
    double slope = dir.dot(g), alpha = std::min(1.0, 0.5 / dir.lpNorm<Eigen::Infinity>());
    RadialField trial = f;
    bool accepted = false;
    // Regions with tiny weight change the energy by less than its round-off; there a step is judged
    // by the residual merit instead.
    double magnitude = 0;
    energy_sum(f, q, s_star, k, p, &magnitude);
    double flat = 1e-12 * magnitude + 1e-300;
    scales(f);
    double phi = merit(g);
    Eigen::VectorXd gt;
    for (int ls = 0; ls < 60 && !accepted; ++ls, alpha *= 0.5) {
      for (size_t i = 0; i < m; ++i) trial.f[i] = f.f[i] + alpha * dir[i];
      double Et = energy_sum(trial, q, s_star, k, p);
      bool decrease = Et < E + 1e-4 * alpha * slope && E - Et > flat;
      if (!decrease && Et - E <= flat) {
        gradient(trial, gt);
        decrease = merit(gt) < (1 - 1e-4 * alpha) * phi;
      }
      if (decrease) {
        f = trial;
        E = Et;
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  gradient(f, g);
  out.el_residual = el(f, g);
  out.iterations = it;
  if (out.el_residual > opt.tol) throw Error(Errc::NonConvergence, "residual " + std::to_string(out.el_residual));
  out.energy = E;
  auto res = residual_of(f, s_star, d, k, p);
  for (double v : res) out.ode_residual = std::max(out.ode_residual, std::abs(v));
  out.f = std::move(f);
  return out;
}

}  // namespace

Minimizer minimize_weighted_energy(double s_star, int d, double k, const TargetSurfaceProfile& p,
                                   const RadialField* init, const MinimizeOptions& opt) {
  RadialField f = init ? *init : sample(energy_grid(), [](double r) { return -0.3 * std::exp(-(r - 1) * (r - 1)); });
  check_field(f);
  if (-4 * k * p.dG(s_star) > (d - 2) * (d - 2) + kCriterionTol) return descend(s_star, d, k, p, f, opt);
  // A stable equator is the minimizer. Descent from init can stall on a structure pinned at the
  // innermost grid node, so the equator itself is the fallback.
  try {
    Minimizer m = descend(s_star, d, k, p, f, opt);
    if (m.energy <= 0) return m;
  } catch (const Error& e) {
    if (e.code() != Errc::NonConvergence) throw;
  }
  // The computed s* is an equator only to round-off, so the constant field is refined by descent too.
  std::fill(f.f.begin(), f.f.end(), 0.0);
  Minimizer z = descend(s_star, d, k, p, f, opt);
  z.equator = true;
  return z;
}

namespace {

struct HardyFE {
  int d;
  std::vector<double> r;  // r[0] = r_min, r.back() = 1 (w = 0 there)
  Eigen::SparseMatrix<double> K, M;
};

HardyFE hardy_fe(int d, int n = 1200, double r_min = 1e-16) {
  HardyFE fe;
  fe.d = d;
  for (int i = 0; i <= n; ++i) fe.r.push_back(r_min * std::pow(1 / r_min, double(i) / n));
  std::vector<Eigen::Triplet<double>> tk, tm;
  // w is constant on (0, r_min); that piece only adds mass.
  tm.emplace_back(0, 0, std::pow(r_min, d - 2) / (d - 2));
  for (int i = 0; i < n; ++i) {
    double a = fe.r[i], b = fe.r[i + 1], h = b - a;
    double s = (std::pow(b, d) - std::pow(a, d)) / d / (h * h);
    double m00 = gauss5([&](double x) { double t = (b - x) / h; return t * t * std::pow(x, d - 3); }, a, b);
    double m01 = gauss5([&](double x) { return (b - x) * (x - a) / (h * h) * std::pow(x, d - 3); }, a, b);
    double m11 = gauss5([&](double x) { double t = (x - a) / h; return t * t * std::pow(x, d - 3); }, a, b);
    int j = i + 1;
    tk.emplace_back(i, i, s);
    tm.emplace_back(i, i, m00);
    if (j < n) {
      tk.emplace_back(j, j, s);
      tk.emplace_back(i, j, -s);
      tk.emplace_back(j, i, -s);
      tm.emplace_back(j, j, m11);
      tm.emplace_back(i, j, m01);
      tm.emplace_back(j, i, m01);
    }
  }
  fe.K.resize(n, n);
  fe.M.resize(n, n);
  fe.K.setFromTriplets(tk.begin(), tk.end());
  fe.M.setFromTriplets(tm.begin(), tm.end());
  return fe;
}

double quotient(const HardyFE& fe, const Eigen::VectorXd& w) { return w.dot(fe.K * w) / w.dot(fe.M * w); }

}  // namespace

double hardy_trial_quotient(int d, double eps) {
  HardyFE fe = hardy_fe(d);
  double alpha = -0.5 * (d - 2) + eps;
  Eigen::VectorXd w(fe.K.rows());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = std::pow(fe.r[i], alpha) - 1;
  return quotient(fe, w);
}

HardyResult hardy_rayleigh(int d, int trials, std::uint64_t seed) {
  if (d < 3) throw Error(Errc::InvalidArgument, "d must be at least 3");
  HardyResult res;
  res.target = 0.25 * (d - 2.0) * (d - 2.0);
  HardyFE fe = hardy_fe(d);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> K(fe.K);
  const Eigen::Index n = fe.K.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  res.best_ratio = INFINITY;
  for (int t = 0; t < trials; ++t) {
    // Random combination of smooth bumps in log r.
    Eigen::VectorXd w(n);
    double c[6];
    for (double& x : c) x = N(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      double u = std::log(fe.r[i]) / std::log(fe.r[0]);  // 1 at r_min, 0 at 1
      double v = 0;
      for (int j = 0; j < 6; ++j) v += c[j] * std::sin((j + 1) * M_PI * (1 - u) / 2) * (1 - std::pow(1 - u, 2));
      w[i] = v + 1e-3 * N(rng);
    }
    res.trial_ratios.push_back(quotient(fe, w));
    for (int k = 0; k < 300; ++k) {
      w = K.solve(fe.M * w);
      w /= w.norm();
    }
    double r = quotient(fe, w);
    res.trial_ratios.push_back(r);
    res.best_ratio = std::min(res.best_ratio, r);
  }
  // Weighted inequality on random compactly supported profiles on [0, 8].
  for (int t = 0; t < std::max(trials, 8); ++t) {
    double c[4];
    for (double& x : c) x = N(rng);
    auto f = [&](double r) {
      double x = r / 8;
      if (x >= 1) return 0.0;
      double v = 0;
      for (int j = 0; j < 4; ++j) v += c[j] * std::cos((j + 0.5) * M_PI * x);
      return v;
    };
    auto df = [&](double r) {
      double x = r / 8;
      if (x >= 1) return 0.0;
      double v = 0;
      for (int j = 0; j < 4; ++j) v -= c[j] * (j + 0.5) * M_PI / 8 * std::sin((j + 0.5) * M_PI * x);
      return v;
    };
    double num = 0, den = 0;
    for (int i = 0; i < 800; ++i) {
      double a = 8.0 * i / 800, b = 8.0 * (i + 1) / 800;
      auto top = [&](double r) { return f(r) * f(r) * (1 + r * r) * std::pow(r, d - 3) * std::exp(r * r / 4); };
      num += gauss5(top, a, b);
      den += gauss5([&](double r) { return df(r) * df(r) * std::pow(r, d - 1) * std::exp(r * r / 4); }, a, b);
    }
    res.weighted_max_ratio = std::max(res.weighted_max_ratio, num / den);
  }
  return res;
}

}  // namespace hmhf
