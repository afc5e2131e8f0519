#include <cmath>
#include <functional>
#include <numbers>
#include <set>

#include "doctest.h"
#include "hmhf/family.hpp"

using namespace hmhf;

namespace {

constexpr double pi = std::numbers::pi;

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}

struct Sphere3 {
  TargetSurfaceProfile p = TargetSurfaceProfile::sphere();
  Eigenmap e = eigenmap_eigenvalue(3, 1);
  FamilyConfig c = family_config(p, e);
  FamilySweep sweep = sweep_family(p, c, 3);
};

const Sphere3& sphere3() {
  static const Sphere3 s;
  return s;
}

}  // namespace

TEST_CASE("safe radius") {
  auto p = TargetSurfaceProfile::sphere();
  // Theta = 1: 4 k <= (D-2)^2 gives D = 5 for k = 2 and D = 7 for k = 6.
  auto s3 = safe_radius(p, 3, 2);
  CHECK(s3.D == 5);
  CHECK(s3.R == doctest::Approx(2 * std::sqrt(2.0)));
  auto s7 = safe_radius(p, 7, 6);
  CHECK(s7.D == 7);
  CHECK(s7.R == 0.0);
}

TEST_CASE("limit map") {
  auto p = TargetSurfaceProfile::sphere();
  auto c7 = family_config(p, eigenmap_eigenvalue(7, 1));
  CHECK(limit_map(p, c7, 0.0).limit == 0.0);
  double prev = 0;
  for (double a : {1.0, 10.0, 100.0, 1e3, 1e4}) {
    double L = limit_map(p, c7, a).limit;
    CHECK(L > prev);
    CHECK(L < pi / 2);
    prev = L;
  }
  CHECK(prev > pi / 2 - 1e-6);
  auto c3 = family_config(p, eigenmap_eigenvalue(3, 1));
  CHECK(limit_map(p, c3, 10.0).limit > pi / 2);
}

TEST_CASE("intersection count") {
  const auto& s = sphere3();
  auto t0 = shoot(s.p, s.c, 0.0);
  CHECK(intersection_count(t0, pi / 2, s.sweep.safe.R).count == 0);
  CHECK(intersection_count(shoot(s.p, s.c, 0.01), pi / 2, s.sweep.safe.R).count == 0);
  int prev = 0;
  for (double a : {1e2, 1e3, 1e4, 1e5}) {
    int I = intersection_count(shoot(s.p, s.c, a), pi / 2, s.sweep.safe.R).count;
    CHECK(I >= 2);
    CHECK(I > prev);
    prev = I;
  }
}

TEST_CASE("sweep invariants") {
  const auto& s = sphere3();
  const auto& rec = s.sweep.records;
  CHECK(rec.front().I == 0);
  for (size_t i = 1; i < rec.size(); ++i) {
    CHECK(rec[i].I >= rec[i - 1].I);
    CHECK(rec[i].I <= rec[i - 1].I + 1);
  }
  // At most one counted crossing beyond R, and such a crossing keeps the limit away from the equator.
  for (size_t i = 0; i < rec.size(); i += 8) {
    auto t = shoot(s.p, s.c, rec[i].a);
    auto cc = intersection_count(t, pi / 2, s.sweep.safe.R);
    CHECK(cc.beyond_R <= 1);
    if (cc.beyond_R == 1 && std::isfinite(cc.last_r)) {
      // The universal tail bound is too coarse here; separate the limit from the equator using the
      // change of the estimate under doubling r_max.
      auto c2 = s.c;
      c2.shoot.r_max = 2 * t.r_max();
      c2.shoot.extend = false;
      double drift = std::abs(shoot(s.p, c2, rec[i].a).tail.limit - t.tail.limit);
      CHECK(std::abs(t.tail.limit - pi / 2) > 10 * drift);
    }
  }
}

TEST_CASE("uniqueness regime: strictly increasing limits and no crossings") {
  auto p = TargetSurfaceProfile::sphere();
  auto c = family_config(p, eigenmap_eigenvalue(7, 1));
  c.per_decade = 16;
  auto sw = sweep_family(p, c);
  for (size_t i = 0; i < sw.records.size(); ++i) {
    CHECK(sw.records[i].I == 0);
    if (i) CHECK(sw.records[i].L > sw.records[i - 1].L);
  }
  CHECK(code_of([&] { find_jump_points(p, c, sw, 0); }) == Errc::JumpNotFound);
}

TEST_CASE("jump points for d = 3") {
  const auto& s = sphere3();
  auto sw = s.sweep;
  auto jumps = find_jump_points(s.p, s.c, sw, 2);
  REQUIRE(jumps.size() == 3);
  for (const auto& j : jumps) {
    CHECK(std::abs(j.L - pi / 2) <= j.bound);
    CHECK(j.a_hi - j.a_lo <= 1e-9 * j.a_hi);
    auto lo = intersection_count(shoot(s.p, s.c, j.a_lo), pi / 2, s.sweep.safe.R).count;
    auto hi = intersection_count(shoot(s.p, s.c, j.a_hi), pi / 2, s.sweep.safe.R).count;
    CHECK(lo == j.n);
    CHECK(hi == j.n + 1);
  }
  CHECK(jumps[0].a_lo < jumps[1].a_lo);
  CHECK(jumps[1].a_lo < jumps[2].a_lo);
}

TEST_CASE("solving for prescribed initial data") {
  auto p = TargetSurfaceProfile::sphere();
  auto c7 = family_config(p, eigenmap_eigenvalue(7, 1));
  CHECK(solve_initial_data(p, c7, 0.0, 0.1, 10.0).spec.a == 0.0);
  auto t = solve_initial_data(p, c7, 1.0, 0.01, 100.0);
  CHECK(std::abs(t.tail.limit - 1.0) < 1e-9);
  for (double dh : t.dh) CHECK(dh > 0);
  CHECK(code_of([&] { solve_initial_data(p, c7, 1.0, 10.0, 100.0); }) == Errc::NoBracket);

  // d = 3, s just below the equator: one root left of the first jump, one between the second and third.
  const auto& s = sphere3();
  auto sw = s.sweep;
  auto jumps = find_jump_points(s.p, s.c, sw, 2);
  double target = pi / 2 - 0.01, a_min = 0, L_min = INFINITY;
  for (const auto& r : sw.records)
    if (r.I == 2 && r.L < L_min) L_min = r.L, a_min = r.a;
  REQUIRE(L_min < target);
  auto t0 = solve_initial_data(s.p, s.c, target, sw.records.front().a, jumps[0].a_lo);
  auto t2 = solve_initial_data(s.p, s.c, target, a_min, jumps[2].a_lo);
  CHECK(intersection_count(t0, pi / 2, sw.safe.R).count == 0);
  CHECK(intersection_count(t2, pi / 2, sw.safe.R).count == 2);
  CHECK(std::abs(t0.tail.limit - target) < 1e-9);
  CHECK(std::abs(t2.tail.limit - target) < 1e-9);
}

TEST_CASE("multiplicity windows") {
  const auto& s = sphere3();
  auto w2 = multiplicity_window(s.p, s.e, pi / 2, 2, s.c);
  CHECK(w2.lo < pi / 2);
  CHECK(pi / 2 < w2.hi);
  REQUIRE(w2.exemplars.members.size() == 2);
  CHECK(w2.exemplars.members[0].crossings <= 1);
  CHECK(w2.exemplars.members[1].crossings >= 2);
  CHECK(w2.exemplars.members[1].crossings <= 3);

  auto w3 = multiplicity_window(s.p, s.e, pi / 2, 3, s.c);
  CHECK(w3.hi - w3.lo < w2.hi - w2.lo);
  std::set<int> counts;
  for (const auto& m : w3.exemplars.members) {
    counts.insert(m.crossings);
    CHECK(m.limit_residual < 1e-6);
  }
  CHECK(counts.size() == 3);

  auto c7 = family_config(s.p, eigenmap_eigenvalue(7, 1));
  CHECK(code_of([&] { multiplicity_window(s.p, eigenmap_eigenvalue(7, 1), pi / 2, 2, c7); }) ==
        Errc::CriterionNotMet);
}

TEST_CASE("uniqueness audit") {
  auto p = TargetSurfaceProfile::sphere();
  auto r7 = uniqueness_audit(p, eigenmap_eigenvalue(7, 1), 1);
  CHECK_FALSE(r7.refused);
  CHECK(r7.pass);
  for (int n : r7.roots) CHECK(n == 1);
  auto r3 = uniqueness_audit(p, eigenmap_eigenvalue(3, 1), 1);
  CHECK(r3.refused);
  auto r8 = uniqueness_audit(TargetSurfaceProfile::perturbed_sphere(0.05), eigenmap_eigenvalue(8, 1), 1);
  CHECK_FALSE(r8.refused);
  CHECK(r8.pass);
}
