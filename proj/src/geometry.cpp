#include "hmhf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Sparse>

namespace hmhf {

const char* to_string(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidProfile: return "InvalidProfile";
    case Errc::DegenerateCritical: return "DegenerateCritical";
    case Errc::NotAnEquator: return "NotAnEquator";
    case Errc::NoFlankingMinima: return "NoFlankingMinima";
    case Errc::NonMinimalBase: return "NonMinimalBase";
    case Errc::SeriesDivergence: return "SeriesDivergence";
    case Errc::StepFailure: return "StepFailure";
    case Errc::BlowUp: return "BlowUp";
    case Errc::Unbounded: return "Unbounded";
    case Errc::TangencySuspected: return "TangencySuspected";
    case Errc::NoBracket: return "NoBracket";
    case Errc::NonMonotoneBracket: return "NonMonotoneBracket";
    case Errc::JumpNotFound: return "JumpNotFound";
    case Errc::CriterionNotMet: return "CriterionNotMet";
    case Errc::DegenerateMode: return "DegenerateMode";
    case Errc::DivergentQuadrature: return "DivergentQuadrature";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::StepRejected: return "StepRejected";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

const char* to_string(LevelKind k) {
  switch (k) {
    case LevelKind::Pole: return "pole";
    case LevelKind::Equator: return "equator";
    case LevelKind::MinimalSphere: return "minimal_sphere";
  }
  return "unknown";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::GloballyMinimising: return "GloballyMinimising";
    case Verdict::LocallyMinimising: return "LocallyMinimising";
    case Verdict::NotLocallyMinimising: return "NotLocallyMinimising";
    case Verdict::Indeterminate: return "Indeterminate";
  }
  return "Unknown";
}

namespace {

constexpr double kRootTol = 1e-12;

double bisect(const std::function<double(double)>& f, double a, double b, double fa) {
  while (b - a > kRootTol) {
    double m = 0.5 * (a + b);
    double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Roots of f in [lo, hi] from sign changes on a uniform grid of spacing ~h, refined by bisection.
std::vector<double> grid_roots(const std::function<double(double)>& f, double lo, double hi, double h) {
  int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / h)));
  double step = (hi - lo) / n;
  std::vector<double> roots;
  double a = lo - step;
  double fa = f(a);
  for (int i = 0; i <= n + 1; ++i) {
    double b = lo + i * step;
    double fb = f(b);
    double r = NAN;
    if (fa == 0.0) {
      r = a;
    } else if ((fa < 0) != (fb < 0) && fb != 0.0) {
      r = bisect(f, a, b, fa);
    }
    if (!std::isnan(r) && r >= lo - 1e-9 && r <= hi + 1e-9) {
      if (roots.empty() || r - roots.back() > 1e-9) roots.push_back(r);
    }
    a = b;
    fa = fb;
  }
  if (fa == 0.0 && a <= hi + 1e-9 && (roots.empty() || a - roots.back() > 1e-9)) roots.push_back(a);
  return roots;
}

struct PeriodicSpline {
  std::vector<double> x, y, m;  // m = second derivatives
  double period;

  Jet operator()(double s) const {
    double x0 = x.front();
    double t = std::fmod(s - x0, period);
    if (t < 0) t += period;
    t += x0;
    size_t n = x.size();
    size_t i = std::upper_bound(x.begin(), x.end(), t) - x.begin();
    i = (i == 0) ? 0 : i - 1;
    double xa = x[i];
    double xb = (i + 1 < n) ? x[i + 1] : x0 + period;
    double ya = y[i], yb = y[(i + 1) % n];
    double ma = m[i], mb = m[(i + 1) % n];
    double h = xb - xa;
    double A = xb - t, B = t - xa;
    Jet j{};
    j[0] = ma * A * A * A / (6 * h) + mb * B * B * B / (6 * h) + (ya / h - ma * h / 6) * A + (yb / h - mb * h / 6) * B;
    j[1] = -ma * A * A / (2 * h) + mb * B * B / (2 * h) - (ya / h - ma * h / 6) + (yb / h - mb * h / 6);
    j[2] = ma * A / h + mb * B / h;
    j[3] = (mb - ma) / h;
    j[4] = 0.0;
    return j;
  }
};

}  // namespace

TargetSurfaceProfile::TargetSurfaceProfile(std::string name, Evaluator eval, Domain domain)
    : name_(std::move(name)), eval_(std::move(eval)), domain_(domain) {
  if (domain_.periodic && !(domain_.period > 0))
    throw Error(Errc::InvalidProfile, "period must be positive");
  if (!domain_.periodic && !(domain_.hi > domain_.lo))
    throw Error(Errc::InvalidProfile, "empty interval domain");
  scan();
}

double TargetSurfaceProfile::G(double s) const {
  Jet j = eval_(s);
  return j[0] * j[1];
}
double TargetSurfaceProfile::dG(double s) const {
  Jet j = eval_(s);
  return j[1] * j[1] + j[0] * j[2];
}
double TargetSurfaceProfile::d2G(double s) const {
  Jet j = eval_(s);
  return 3 * j[1] * j[2] + j[0] * j[3];
}
double TargetSurfaceProfile::d3G(double s) const {
  Jet j = eval_(s);
  return 3 * j[2] * j[2] + 4 * j[1] * j[3] + j[0] * j[4];
}

double TargetSurfaceProfile::window_lo() const { return domain_.periodic ? 0.0 : domain_.lo; }
double TargetSurfaceProfile::window_hi() const {
  return domain_.periodic ? domain_.period : domain_.hi;
}

void TargetSurfaceProfile::scan() {
  double lo = window_lo(), hi = window_hi();
  int n = kGridPerPeriod;
  double h = (hi - lo) / n;
  sup_g_ = sup_G_ = sup_d2g2_ = 0.0;
  min_dG_ = INFINITY;
  for (int i = 0; i <= n; ++i) {
    Jet j = eval_(lo + i * h);
    double dG = j[1] * j[1] + j[0] * j[2];
    sup_g_ = std::max(sup_g_, std::abs(j[0]));
    sup_G_ = std::max(sup_G_, std::abs(j[0] * j[1]));
    sup_d2g2_ = std::max(sup_d2g2_, 2 * std::abs(dG));
    min_dG_ = std::min(min_dG_, dG);
  }
  auto gf = [this](double s) { return eval_(s)[0]; };
  double hi_scan = domain_.periodic ? hi - 0.5 * h : hi;
  poles_ = grid_roots(gf, lo, hi_scan, h);
}

TargetSurfaceProfile TargetSurfaceProfile::sphere() {
  return TargetSurfaceProfile(
      "sphere",
      [](double s) {
        double sn = std::sin(s), cs = std::cos(s);
        return Jet{sn, cs, -sn, -cs, sn};
      },
      Domain{true, 2 * std::numbers::pi, 0, 0});
}

TargetSurfaceProfile TargetSurfaceProfile::perturbed_sphere(double eps) {
  // sin s (1 + eps sin^2 s) = (1 + 3 eps/4) sin s - (eps/4) sin 3s
  double a = 1 + 0.75 * eps, b = 0.25 * eps;
  return TargetSurfaceProfile(
      "perturbed_sphere",
      [a, b](double s) {
        double s1 = std::sin(s), c1 = std::cos(s), s3 = std::sin(3 * s), c3 = std::cos(3 * s);
        return Jet{a * s1 - b * s3, a * c1 - 3 * b * c3, -a * s1 + 9 * b * s3, -a * c1 + 27 * b * c3,
                   a * s1 - 81 * b * s3};
      },
      Domain{true, 2 * std::numbers::pi, 0, 0});
}

TargetSurfaceProfile TargetSurfaceProfile::spline(const std::vector<double>& knots,
                                                  const std::vector<double>& values, double period,
                                                  double pole_tol) {
  size_t n = knots.size();
  if (n < 4 || values.size() != n) throw Error(Errc::InvalidProfile, "spline needs >= 4 matching knots/values");
  if (!(period > 0)) throw Error(Errc::InvalidProfile, "spline period must be positive");
  for (size_t i = 1; i < n; ++i)
    if (!(knots[i] > knots[i - 1])) throw Error(Errc::InvalidProfile, "spline knots must increase");
  if (!(knots.back() < knots.front() + period))
    throw Error(Errc::InvalidProfile, "spline knots must span less than one period");

  auto sp = std::make_shared<PeriodicSpline>();
  sp->x = knots;
  sp->y = values;
  sp->period = period;
  std::vector<double> hs(n);
  for (size_t i = 0; i < n; ++i) hs[i] = (i + 1 < n ? knots[i + 1] : knots[0] + period) - knots[i];
  Eigen::SparseMatrix<double> A(n, n);
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(n);
  for (size_t i = 0; i < n; ++i) {
    size_t im = (i + n - 1) % n, ip = (i + 1) % n;
    double hm = hs[im], hp = hs[i];
    trip.emplace_back(i, im, hm);
    trip.emplace_back(i, i, 2 * (hm + hp));
    trip.emplace_back(i, ip, hp);
    rhs[i] = 6 * ((values[ip] - values[i]) / hp - (values[i] - values[im]) / hm);
  }
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  Eigen::VectorXd m = lu.solve(rhs);
  sp->m.assign(m.data(), m.data() + n);

  TargetSurfaceProfile p("spline", [sp](double s) { return (*sp)(s); }, Domain{true, period, 0, 0});
  if (p.poles().empty()) throw Error(Errc::InvalidProfile, "spline profile has no pole");
  for (double pole : p.poles()) {
    if (std::abs(std::abs(p.dg(pole)) - 1.0) > pole_tol)
      throw Error(Errc::InvalidProfile, "|g'| != 1 at pole " + std::to_string(pole));
    for (int i = 1; i <= 20; ++i) {
      double dl = 0.01 * i;
      if (std::abs(p.g(pole + dl) + p.g(pole - dl)) > pole_tol)
        throw Error(Errc::InvalidProfile, "g not odd about pole " + std::to_string(pole));
    }
  }
  return p;
}

Eigenmap eigenmap_eigenvalue(int d, int l) {
  if (d < 3) throw Error(Errc::InvalidArgument, "d must be >= 3");
  if (l < 1) throw Error(Errc::InvalidArgument, "l must be >= 1");
  return Eigenmap{d, l, static_cast<double>(l * (d - 2 + l))};
}

LevelClassification classify_levels(const TargetSurfaceProfile& p, double lo, double hi) {
  if (!(hi > lo)) throw Error(Errc::InvalidArgument, "empty window");
  const Domain& dom = p.domain();
  if (!dom.periodic && (lo < dom.lo - 1e-12 || hi > dom.hi + 1e-12))
    throw Error(Errc::InvalidArgument, "window outside profile domain");
  double span = p.window_hi() - p.window_lo();
  double h = span / TargetSurfaceProfile::kGridPerPeriod;
  auto Gf = [&p](double s) { return p.G(s); };
  LevelClassification out;
  for (double s : grid_roots(Gf, lo, hi, h)) {
    double dG = p.dG(s);
    // Newton polish; the bracketing root is only as good as its bisection tolerance.
    for (int it = 0; it < 3 && std::abs(dG) > 1e-8; ++it) {
      s -= p.G(s) / dG;
      dG = p.dG(s);
    }
    double gv = p.g(s);
    if (std::abs(dG) < 1e-8)
      throw Error(Errc::DegenerateCritical, "G' = " + std::to_string(dG) + " at s = " + std::to_string(s));
    LevelKind kind;
    if (std::abs(gv) < 1e-9)
      kind = LevelKind::Pole;
    else
      kind = dG < 0 ? LevelKind::Equator : LevelKind::MinimalSphere;
    out.push_back(Level{s, kind, dG});
  }
  return out;
}

double theta(const TargetSurfaceProfile& p) { return -p.min_dG(); }

double next_equator(const TargetSurfaceProfile& p, double s0) {
  double span = p.window_hi() - p.window_lo();
  double hi = p.domain().periodic ? s0 + span : p.domain().hi;
  for (const Level& l : classify_levels(p, s0 + 1e-9, hi))
    if (l.kind == LevelKind::Equator) return l.s;
  throw Error(Errc::NotAnEquator, "no equator above " + std::to_string(s0));
}

namespace {

bool is_equator(const TargetSurfaceProfile& p, double s) {
  return std::abs(p.g(s)) > 1e-9 && std::abs(p.G(s)) < 1e-8 && p.dG(s) < 0;
}

double grid_max(const std::function<double(double)>& f, double lo, double hi, double h, double include) {
  int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / h)));
  double step = (hi - lo) / n;
  double m = f(include);
  for (int i = 0; i <= n; ++i) m = std::max(m, f(lo + i * step));
  return m;
}

}  // namespace

bool check_condition_C1(const TargetSurfaceProfile& p, double s_star) {
  if (!is_equator(p, s_star)) throw Error(Errc::NotAnEquator, "s = " + std::to_string(s_star));
  double span = p.window_hi() - p.window_lo();
  double lo = p.domain().periodic ? s_star - span : p.domain().lo;
  double hi = p.domain().periodic ? s_star + span : p.domain().hi;
  double s1 = NAN, s2 = NAN;
  for (const Level& l : classify_levels(p, lo, hi)) {
    if (l.kind == LevelKind::Equator) continue;
    if (l.s < s_star - 1e-9) s1 = l.s;
    if (l.s > s_star + 1e-9 && std::isnan(s2)) s2 = l.s;
  }
  if (std::isnan(s1) || std::isnan(s2)) throw Error(Errc::NoFlankingMinima, "around " + std::to_string(s_star));
  double h = span / TargetSurfaceProfile::kGridPerPeriod;
  double min_dG = -grid_max([&p](double s) { return -p.dG(s); }, s1, s2, h, s_star);
  return p.dG(s_star) <= min_dG + 1e-8;
}

bool check_condition_C2(const TargetSurfaceProfile& p, const Eigenmap& e) {
  double bound = (e.d - 1) / e.k;
  for (const Level& l : classify_levels(p, p.window_lo(), p.window_hi()))
    if (l.kind == LevelKind::MinimalSphere && l.dG < bound - 1e-10) return false;
  return true;
}

CriterionReport minimizing_criterion(const TargetSurfaceProfile& p, const Eigenmap& e, double s_star) {
  if (!is_equator(p, s_star)) throw Error(Errc::NotAnEquator, "s = " + std::to_string(s_star));
  CriterionReport r;
  r.s_star = s_star;
  r.lhs = -4 * e.k * p.dG(s_star);
  r.rhs = static_cast<double>((e.d - 2) * (e.d - 2));
  r.S = 2 * std::sqrt(e.k) / (e.d - 2) * p.sup_g();
  r.theta = theta(p);
  double h = (p.window_hi() - p.window_lo()) / TargetSurfaceProfile::kGridPerPeriod;
  r.max_lhs_on_window =
      grid_max([&](double s) { return -4 * e.k * p.dG(s); }, s_star - r.S, s_star + r.S, h, s_star);
  if (std::abs(r.lhs - r.rhs) <= kCriterionTol)
    r.verdict = Verdict::Indeterminate;
  else if (r.lhs > r.rhs)
    r.verdict = Verdict::NotLocallyMinimising;
  else if (r.max_lhs_on_window <= r.rhs + kCriterionTol)
    r.verdict = Verdict::GloballyMinimising;
  else
    r.verdict = Verdict::LocallyMinimising;
  try {
    r.c1 = check_condition_C1(p, s_star);
  } catch (const Error&) {
    r.c1 = false;
  }
  r.c2 = check_condition_C2(p, e);
  return r;
}

}  // namespace hmhf
