#include "hmhf/family.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "hmhf/numerics.hpp"
#include "hmhf/parallel.hpp"

namespace hmhf {

SafeRadius safe_radius(const TargetSurfaceProfile& p, int d, double k) {
  SafeRadius s;
  s.theta = theta(p);
  s.D = d;
  while (4 * k * s.theta > (s.D - 2.0) * (s.D - 2.0) + kCriterionTol) ++s.D;
  s.R = 2 * std::sqrt(double(s.D - d));
  return s;
}

FamilyConfig family_config(const TargetSurfaceProfile& p, const Eigenmap& e, double s0) {
  FamilyConfig c;
  c.d = e.d;
  c.k = e.k;
  c.s0 = s0;
  c.s_star = next_equator(p, s0);
  return c;
}

Trajectory shoot(const TargetSurfaceProfile& p, const FamilyConfig& c, double a) {
  ShootSpec s = c.shoot;
  s.d = c.d;
  s.k = c.k;
  s.s0 = c.s0;
  s.a = a;
  if (s.eq == Equation::GeneralDimension && s.D == 0) s.eq = Equation::Expander;
  return integrate(p, s);
}

LimitEstimate limit_map(const TargetSurfaceProfile& p, const FamilyConfig& c, double a) {
  Trajectory t = shoot(p, c, a);
  return {t.tail.limit, t.tail.bound};
}

CrossingCount intersection_count(const Trajectory& t, double s_star, double R) {
  CrossingCount cc;
  std::vector<double> where;
  size_t n = t.size();
  auto f = [&](size_t i) { return t.h[i] - s_star; };
  for (size_t i = 0; i + 1 < n; ++i) {
    double a = t.r[i], b = t.r[i + 1];
    double fa = f(i), fb = f(i + 1);
    bool turn = (t.dh[i] > 0) != (t.dh[i + 1] > 0);
    if (fa == 0.0 && i > 0) continue;  // counted with the previous interval
    if ((fa < 0) != (fb < 0) && fb != 0.0) {
      where.push_back(a - fa * (b - a) / (fb - fa));
      continue;
    }
    if (fb == 0.0 && i + 2 < n && (fa < 0) != (f(i + 2) < 0)) {
      where.push_back(b);
      continue;
    }
    if (!turn) continue;
    // h has an extremum inside; look for a hidden pair of crossings and for near-tangency.
    double lo = a, hi = b;
    auto dh = [&](double x) {
      return quintic_hermite(a, b, t.h[i], t.dh[i], t.ddh[i], t.h[i + 1], t.dh[i + 1], t.ddh[i + 1], x);
    };
    for (int it = 0; it < 60; ++it) {
      double m = 0.5 * (lo + hi);
      if ((dh(m).deriv > 0) == (t.dh[i] > 0)) lo = m;
      else hi = m;
    }
    double fe = dh(0.5 * (lo + hi)).value - s_star;
    // Beyond R at most one crossing can occur, so a near-touch there cannot hide a pair.
    if (std::abs(fe) < 1e-10 && lo <= R)
      throw Error(Errc::TangencySuspected, "extremum at the level near r = " + std::to_string(lo));
    if ((fe < 0) != (fa < 0)) {
      where.push_back(0.5 * (a + lo));
      where.push_back(0.5 * (lo + b));
    }
  }
  double raw_side = t.tail.raw - s_star, lim_side = t.tail.limit - s_star;
  if (t.bounded && raw_side != 0.0 && (raw_side < 0) != (lim_side < 0)) where.push_back(INFINITY);
  cc.raw = static_cast<int>(where.size());
  int inner = 0;
  for (double r : where) {
    if (r > R) ++cc.beyond_R;
    else ++inner;
  }
  cc.count = inner + std::min(cc.beyond_R, 1);
  cc.last_r = where.empty() ? 0.0 : where.back();
  return cc;
}

namespace {

SweepRecord record(const TargetSurfaceProfile& p, const FamilyConfig& c, const SafeRadius& sr, double a) {
  Trajectory t = shoot(p, c, a);
  if (!t.bounded) throw Error(Errc::Unbounded, "a = " + std::to_string(a));
  SweepRecord r;
  r.a = a;
  r.L = t.tail.limit;
  r.Lbound = t.tail.bound;
  r.M = t.sup_h;
  r.I = intersection_count(t, c.s_star, sr.R).count;
  return r;
}

int count_at(const TargetSurfaceProfile& p, const FamilyConfig& c, const SafeRadius& sr, double a) {
  return record(p, c, sr, a).I;
}

}  // namespace

FamilySweep sweep_family(const TargetSurfaceProfile& p, const FamilyConfig& c, int min_I) {
  if (!(c.a_min > 0) || !(c.a_max > c.a_min) || c.per_decade < 1)
    throw Error(Errc::InvalidArgument, "sweep range must satisfy 0 < a_min < a_max");
  FamilySweep sw;
  sw.s0 = c.s0;
  sw.s_star = c.s_star;
  sw.safe = safe_radius(p, c.d, c.k);
  double a_max = c.a_max;
  size_t done = 0;
  int top = 0;
  while (true) {
    size_t n = static_cast<size_t>(std::floor(c.per_decade * std::log10(a_max / c.a_min) + 1e-9)) + 1;
    std::vector<SweepRecord> fresh(n - done);
    parallel_for(
        fresh.size(),
        [&](size_t j) {
          double a = c.a_min * std::pow(10.0, double(done + j) / c.per_decade);
          fresh[j] = record(p, c, sw.safe, a);
        },
        c.threads);
    for (auto& r : fresh) top = std::max(top, r.I);
    sw.records.insert(sw.records.end(), fresh.begin(), fresh.end());
    done = n;
    if (top >= min_I || a_max >= 1e9) break;
    a_max *= 10;
  }
  return sw;
}

std::vector<JumpPoint> find_jump_points(const TargetSurfaceProfile& p, const FamilyConfig& c, FamilySweep& sw,
                                        int n_max) {
  std::vector<JumpPoint> out;
  const auto& rec = sw.records;
  for (int n = 0; n <= n_max; ++n) {
    // Last grid point with I <= n that is followed by one with I > n.
    long idx = -1;
    for (size_t i = 0; i + 1 < rec.size(); ++i)
      if (rec[i].I <= n && rec[i + 1].I > n) idx = static_cast<long>(i);
    if (idx < 0) throw Error(Errc::JumpNotFound, "crossing count never exceeds " + std::to_string(n));
    double lo = rec[idx].a, hi = rec[idx + 1].a;
    int I_lo = rec[idx].I;
    // A gap of two or more in the counts means an unresolved grid cell; bisection below still
    // localizes the last a with I = n.
    while (hi - lo > 1e-10 * hi) {
      double m = std::sqrt(lo * hi);
      if (m <= lo || m >= hi) m = 0.5 * (lo + hi);
      int I = count_at(p, c, sw.safe, m);
      if (I <= n) {
        lo = m;
        I_lo = I;
      } else {
        hi = m;
      }
    }
    if (I_lo != n) throw Error(Errc::JumpNotFound, "no parameter with crossing count " + std::to_string(n));
    JumpPoint j;
    j.n = n;
    j.a_lo = lo;
    j.a_hi = hi;
    LimitEstimate L = limit_map(p, c, lo);
    j.L = L.limit;
    j.bound = L.bound;
    out.push_back(j);
  }
  sw.jumps = out;
  return out;
}

Trajectory solve_initial_data(const TargetSurfaceProfile& p, const FamilyConfig& c, double s, double a_lo,
                              double a_hi, double tol) {
  if (std::abs(s - c.s0) <= tol) return shoot(p, c, 0.0);
  SafeRadius sr = safe_radius(p, c.d, c.k);
  Trajectory tl = shoot(p, c, a_lo), th = shoot(p, c, a_hi);
  double fl = tl.tail.limit - s, fh = th.tail.limit - s;
  if (std::abs(fl) < tol) return tl;
  if (std::abs(fh) < tol) return th;
  if ((fl < 0) == (fh < 0)) throw Error(Errc::NoBracket, "L - s has the same sign at both ends");
  int I = intersection_count(tl, c.s_star, sr.R).count;
  if (intersection_count(th, c.s_star, sr.R).count != I)
    throw Error(Errc::NonMonotoneBracket, "crossing counts differ at the bracket ends");
  double lo = a_lo, hi = a_hi;
  for (int it = 0; it < 200; ++it) {
    double m = 0.5 * (lo + hi);
    Trajectory tm = shoot(p, c, m);
    if (intersection_count(tm, c.s_star, sr.R).count != I)
      throw Error(Errc::NonMonotoneBracket, "crossing count changes inside the bracket");
    double fm = tm.tail.limit - s;
    if (std::abs(fm) < tol || std::abs(hi - lo) < 1e-15 * std::abs(m)) return tm;
    if ((fm < 0) == (fl < 0)) {
      lo = m;
      fl = fm;
    } else {
      hi = m;
    }
  }
  throw Error(Errc::NonConvergence, "bisection on a did not converge");
}

MultiplicityWindow multiplicity_window(const TargetSurfaceProfile& p, const Eigenmap& e, double s_star, int K,
                                       FamilyConfig c) {
  if (K < 1) throw Error(Errc::InvalidArgument, "K must be positive");
  CriterionReport cr = minimizing_criterion(p, e, s_star);
  if (cr.verdict != Verdict::NotLocallyMinimising)
    throw Error(Errc::CriterionNotMet, std::string("equator is ") + to_string(cr.verdict));
  c.s_star = s_star;
  MultiplicityWindow w;
  w.sweep = sweep_family(p, c, 2 * K);
  auto& rec = w.sweep.records;
  std::map<int, std::pair<double, double>> range;  // I -> (min L, max L)
  std::map<int, double> argmin;
  for (const auto& r : rec) {
    auto it = range.find(r.I);
    if (it == range.end()) {
      range[r.I] = {r.L, r.L};
      argmin[r.I] = r.a;
      continue;
    }
    if (r.L < it->second.first) {
      it->second.first = r.L;
      argmin[r.I] = r.a;
    }
    it->second.second = std::max(it->second.second, r.L);
  }
  w.lo = -INFINITY;
  w.hi = INFINITY;
  for (int n = 0; n < K; ++n) {
    if (!range.count(2 * n) || !range.count(2 * n + 1))
      throw Error(Errc::JumpNotFound, "sweep misses crossing count " + std::to_string(2 * n + 1));
    w.lo = std::max(w.lo, range[2 * n].first);
    w.hi = std::min(w.hi, range[2 * n + 1].second);
  }
  if (!(w.lo < s_star && s_star < w.hi)) throw Error(Errc::NonConvergence, "empty multiplicity window");

  auto jumps = find_jump_points(p, c, w.sweep, 2 * K - 2);
  double s = 0.5 * (w.lo + s_star);
  w.exemplars.s = s;
  for (int n = 0; n < K; ++n) {
    double a_lo = argmin[2 * n], a_hi = jumps[2 * n].a_lo;
    Trajectory t = solve_initial_data(p, c, s, a_lo, a_hi);
    ProfileMember m;
    m.a = t.spec.a;
    m.crossings = intersection_count(t, s_star, w.sweep.safe.R).count;
    m.limit_residual = std::abs(t.tail.limit - s);
    m.ode_residual = divergence_residual(p, t);
    m.traj = std::move(t);
    w.exemplars.members.push_back(std::move(m));
  }
  return w;
}

UniquenessReport uniqueness_audit(const TargetSurfaceProfile& p, const Eigenmap& e, std::uint64_t seed,
                                  int n_levels) {
  UniquenessReport rep;
  double s0 = p.poles().empty() ? p.window_lo() : p.poles().front();
  LevelClassification lv = classify_levels(p, p.window_lo(), p.window_hi());
  for (const Level& l : lv) {
    if (l.kind != LevelKind::Equator) continue;
    CriterionReport cr = minimizing_criterion(p, e, l.s);
    if (cr.verdict != Verdict::GloballyMinimising && cr.verdict != Verdict::LocallyMinimising) {
      rep.refused = true;
      rep.reason = "equator at " + std::to_string(l.s) + " is " + to_string(cr.verdict);
      return rep;
    }
    if (!cr.c1 || !cr.c2) {
      rep.refused = true;
      rep.reason = "condition C1 or C2 fails at " + std::to_string(l.s);
      return rep;
    }
  }
  FamilyConfig c = family_config(p, e, s0);
  FamilySweep sw = sweep_family(p, c);
  const auto& rec = sw.records;
  rep.pass = true;
  for (size_t i = 0; i < rec.size(); ++i) {
    if (rec[i].I != 0 || !(rec[i].L < c.s_star)) {
      rep.pass = false;
      rep.witnesses.push_back("a = " + std::to_string(rec[i].a) + " reaches the equator");
    }
    if (i > 0 && !(rec[i].L > rec[i - 1].L)) {
      rep.pass = false;
      rep.witnesses.push_back("limit not increasing at a = " + std::to_string(rec[i].a));
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double Lmin = rec.front().L, Lmax = rec.back().L;
  for (int j = 0; j < n_levels; ++j) {
    double s = Lmin + (Lmax - Lmin) * (0.02 + 0.96 * U(rng));
    int roots = 0;
    for (size_t i = 0; i + 1 < rec.size(); ++i)
      if ((rec[i].L - s < 0) != (rec[i + 1].L - s < 0)) ++roots;
    rep.levels.push_back(s);
    rep.roots.push_back(roots);
    if (roots != 1) {
      rep.pass = false;
      rep.witnesses.push_back("level " + std::to_string(s) + " has " + std::to_string(roots) + " roots");
    }
  }
  // Non-crossing of neighbouring trajectories.
  size_t pairs = std::min<size_t>(16, rec.size() - 1);
  std::vector<int> ok(pairs, 1);
  std::vector<size_t> idx(pairs);
  for (auto& i : idx) i = static_cast<size_t>(U(rng) * (rec.size() - 1));
  parallel_for(pairs, [&](size_t j) {
    Trajectory lo = shoot(p, c, rec[idx[j]].a), hi = shoot(p, c, rec[idx[j] + 1].a);
    for (double r : lo.r)
      if (r <= hi.r_max() && !(lo.value(r) < hi.value(r))) ok[j] = 0;
  });
  for (size_t j = 0; j < pairs; ++j)
    if (!ok[j]) {
      rep.pass = false;
      rep.witnesses.push_back("trajectories cross near a = " + std::to_string(rec[idx[j]].a));
    }
  return rep;
}

}  // namespace hmhf
