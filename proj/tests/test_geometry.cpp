#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "hmhf/geometry.hpp"

using namespace hmhf;

namespace {

constexpr double pi = std::numbers::pi;

// sin s (1 + c sin^2 2s): poles at 0 and pi, |g'| = 1 there. Near pi/2 g^2 = 1 + (8c - 1) x^2 + O(x^4),
// so G'(pi/2) = 8c - 1 and pi/2 is a minimal sphere flanked by two equators once 8c > 1.
double dumbbell(double s, double c) {
  double t = std::sin(2 * s);
  return std::sin(s) * (1 + c * t * t);
}

TargetSurfaceProfile dumbbell_spline(double c) {
  std::vector<double> x, y;
  const int n = 512;
  for (int i = 0; i < n; ++i) {
    x.push_back(2 * pi * i / n);
    y.push_back(dumbbell(x.back(), c));
  }
  return TargetSurfaceProfile::spline(x, y, 2 * pi);
}

std::vector<LevelKind> kinds(const LevelClassification& c) {
  std::vector<LevelKind> k;
  for (const auto& l : c) k.push_back(l.kind);
  return k;
}

}  // namespace

TEST_CASE("sphere levels on [0, pi]") {
  auto p = TargetSurfaceProfile::sphere();
  auto c = classify_levels(p, -1e-6, pi + 1e-6);
  REQUIRE(c.size() == 3);
  CHECK(kinds(c) == std::vector{LevelKind::Pole, LevelKind::Equator, LevelKind::Pole});
  CHECK(c[0].s == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c[1].s == doctest::Approx(pi / 2).epsilon(1e-12));
  CHECK(c[2].s == doctest::Approx(pi).epsilon(1e-12));
  CHECK(c[1].dG == doctest::Approx(-1.0));
}

TEST_CASE("perturbed sphere keeps the tag pattern and its equator") {
  auto p = TargetSurfaceProfile::perturbed_sphere(0.2);
  auto c = classify_levels(p, -1e-6, pi + 1e-6);
  CHECK(kinds(c) == std::vector{LevelKind::Pole, LevelKind::Equator, LevelKind::Pole});
  // Oracle: sign change of G = g g' on a fine grid, then bisection.
  auto G = [](double s) {
    double a = std::sin(s), b = std::cos(s), e = 0.2;
    double g = a * (1 + e * a * a), dg = b * (1 + 3 * e * a * a);
    return g * dg;
  };
  double lo = 1.0, hi = 2.0;
  for (int i = 0; i < 80; ++i) {
    double m = 0.5 * (lo + hi);
    (G(lo) * G(m) <= 0 ? hi : lo) = m;
  }
  CHECK(c[1].s == doctest::Approx(lo).epsilon(1e-10));
  CHECK(std::abs(p.dg(0.0)) == doctest::Approx(1.0));
}

TEST_CASE("dumbbell spline has two equators and one minimal sphere") {
  auto p = dumbbell_spline(1.0);
  auto c = classify_levels(p, 0.01, pi - 0.01);
  CHECK(kinds(c) == std::vector{LevelKind::Equator, LevelKind::MinimalSphere, LevelKind::Equator});
  // Oracle: sign of the sampled second difference of g^2 at each reported level.
  for (const auto& l : c) {
    double h = 1e-3;
    double d2 = dumbbell(l.s + h, 1.0) * dumbbell(l.s + h, 1.0) - 2 * dumbbell(l.s, 1.0) * dumbbell(l.s, 1.0) +
                dumbbell(l.s - h, 1.0) * dumbbell(l.s - h, 1.0);
    CHECK((l.kind == LevelKind::Equator ? d2 < 0 : d2 > 0));
  }
  CHECK(c[1].s == doctest::Approx(pi / 2).epsilon(1e-6));
}

TEST_CASE("eigenmap eigenvalues") {
  CHECK(eigenmap_eigenvalue(3, 1).k == 2);
  CHECK(eigenmap_eigenvalue(3, 2).k == 6);
  CHECK(eigenmap_eigenvalue(7, 1).k == 6);
  for (int d = 3; d <= 40; ++d) CHECK(eigenmap_eigenvalue(d, 1).k == d - 1);
  for (int d = 3; d <= 12; ++d)
    for (int l = 1; l <= 6; ++l) {
      auto e = eigenmap_eigenvalue(d, l);
      CHECK(e.k == l * (d - 2 + l));
      CHECK(e.k >= d - 1);
    }
  CHECK_THROWS_AS(eigenmap_eigenvalue(2, 1), Error);
}

TEST_CASE("criterion examples for the round sphere") {
  auto p = TargetSurfaceProfile::sphere();
  auto r7 = minimizing_criterion(p, eigenmap_eigenvalue(7, 1), pi / 2);
  CHECK(r7.lhs == doctest::Approx(24));
  CHECK(r7.rhs == 25);
  CHECK(r7.verdict == Verdict::GloballyMinimising);
  auto r6 = minimizing_criterion(p, eigenmap_eigenvalue(6, 1), pi / 2);
  CHECK(r6.lhs == doctest::Approx(20));
  CHECK(r6.verdict == Verdict::NotLocallyMinimising);
  auto r3 = minimizing_criterion(p, eigenmap_eigenvalue(3, 1), pi / 2);
  CHECK(r3.lhs == doctest::Approx(8));
  CHECK(r3.rhs == 1);
  CHECK(r3.verdict == Verdict::NotLocallyMinimising);
  CHECK_THROWS_AS(minimizing_criterion(p, eigenmap_eigenvalue(7, 1), 1.0), Error);
}

TEST_CASE("criterion table sign change between d = 6 and d = 7") {
  auto p = TargetSurfaceProfile::sphere();
  for (int d = 3; d <= 10; ++d) {
    auto r = minimizing_criterion(p, eigenmap_eigenvalue(d, 1), pi / 2);
    int disc = (d - 2) * (d - 2) - 4 * (d - 1);  // d^2 - 8d + 8
    CHECK(disc == d * d - 8 * d + 8);
    CHECK((r.verdict == Verdict::GloballyMinimising) == (disc > 0));
    CHECK((r.verdict == Verdict::NotLocallyMinimising) == (disc < 0));
  }
}

TEST_CASE("condition C1") {
  CHECK(check_condition_C1(TargetSurfaceProfile::sphere(), pi / 2));
  auto p = TargetSurfaceProfile::perturbed_sphere(0.1);
  CHECK(check_condition_C1(p, next_equator(p, 0.0)));

  // Constructed input: the outer equator of a dumbbell with a grid-min oracle over its flanking minima.
  auto q = dumbbell_spline(1.0);
  auto c = classify_levels(q, 0.01, pi - 0.01);
  double s_star = c[0].s, s1 = 0.0, s2 = c[1].s;
  double m = INFINITY;
  for (int i = 0; i <= 20000; ++i) m = std::min(m, q.dG(s1 + (s2 - s1) * i / 20000));
  CHECK(check_condition_C1(q, s_star) == (q.dG(s_star) <= m + 1e-8));
}

TEST_CASE("condition C2") {
  CHECK(check_condition_C2(TargetSurfaceProfile::sphere(), eigenmap_eigenvalue(5, 1)));
  // G'(pi/2) = 8c - 1 gives 1.3 and 0.5; corotational, so (d-1)/k = 1.
  auto good = dumbbell_spline(2.3 / 8);
  auto bad = dumbbell_spline(1.5 / 8);
  CHECK(good.dG(pi / 2) == doctest::Approx(1.3).epsilon(1e-3));
  CHECK(bad.dG(pi / 2) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(check_condition_C2(good, eigenmap_eigenvalue(4, 1)));
  CHECK_FALSE(check_condition_C2(bad, eigenmap_eigenvalue(4, 1)));
}

TEST_CASE("profile invariants on builtin families") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> eps(0.0, 0.3), U(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = TargetSurfaceProfile::perturbed_sphere(eps(rng));
    for (double pole : {0.0, pi}) {
      CHECK(std::abs(p.dg(pole)) == doctest::Approx(1.0).epsilon(1e-12));
      double dl = U(rng);
      CHECK(p.g(pole + dl) == doctest::Approx(-p.g(pole - dl)).epsilon(1e-12));
    }
    CHECK(std::isfinite(p.sup_d2g2()));
    double m = 0;
    for (int i = 0; i <= 20000; ++i) m = std::max(m, std::abs(p.dG(2 * pi * i / 20000)));
    CHECK(p.sup_d2g2() == doctest::Approx(2 * m).epsilon(1e-6));
  }
}

TEST_CASE("classification is invariant under period shift and pole reflection") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> eps(0.0, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = TargetSurfaceProfile::perturbed_sphere(eps(rng));
    auto base = classify_levels(p, 0.1, 3.0);
    auto shifted = classify_levels(p, 0.1 + 2 * pi, 3.0 + 2 * pi);
    // Reflection about the pole at pi maps [0.1, 3] onto [2 pi - 3, 2 pi - 0.1].
    auto reflected = classify_levels(p, 2 * pi - 3.0, 2 * pi - 0.1);
    REQUIRE(base.size() == shifted.size());
    REQUIRE(base.size() == reflected.size());
    for (size_t i = 0; i < base.size(); ++i) {
      CHECK(shifted[i].kind == base[i].kind);
      CHECK(shifted[i].s - 2 * pi == doctest::Approx(base[i].s).epsilon(1e-10));
      const auto& m = reflected[base.size() - 1 - i];
      CHECK(m.kind == base[i].kind);
      CHECK(2 * pi - m.s == doctest::Approx(base[i].s).epsilon(1e-10));
    }
  }
}
