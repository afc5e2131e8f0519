#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hmhf/spectrum.hpp"

using namespace hmhf;

namespace {

// A on the rho^gamma sector at a pole, gamma(gamma + d - 2) = k G'(s0). Writing w = e^{-rho^2/4} u
// conjugates A to -u'' - ((d-1)/rho - rho/2) u' + (k G'/rho^2) u + (d/2) u, and u = rho^gamma L(rho^2/4)
// with a degree-n polynomial L gives the eigenvalue d/2 + gamma/2 + n.
double ladder(int d, double gamma, int n) { return d / 2.0 + gamma / 2.0 + n; }

// Residual of the ladder eigenfunction in A for n = 0: w = rho^gamma e^{-rho^2/4}.
double ground_residual(int d, double gamma, double rho) {
  double w = std::pow(rho, gamma) * std::exp(-rho * rho / 4);
  double dw = (gamma / rho - rho / 2) * w;
  double ddw = (gamma / rho - rho / 2) * dw + (-gamma / (rho * rho) - 0.5) * w;
  double Aw = -ddw - ((d - 1) / rho + rho / 2) * dw + gamma * (gamma + d - 2) / (rho * rho) * w;
  return Aw - ladder(d, gamma, 0) * w;
}

Trajectory profile(int d, double a) {
  ShootSpec s;
  s.d = d;
  s.k = d - 1;
  s.a = a;
  return integrate(TargetSurfaceProfile::sphere(), s);
}

}  // namespace

TEST_CASE("ladder oracle solves the ground equation") {
  for (int d : {3, 5, 7})
    for (double g : {0.5, 1.0, 2.0})
      for (double rho : {0.3, 1.0, 4.0}) CHECK(std::abs(ground_residual(d, g, rho)) < 1e-10);
}

TEST_CASE("closed-form spectrum of a constant pole profile") {
  auto p = TargetSurfaceProfile::sphere();
  for (int d : {3, 7}) {
    auto lp = constant_problem(p, d, d - 1, 0.0);
    CHECK(lp.gamma2 == doctest::Approx(1.0));
    auto ev = find_eigenvalues(lp, form_lower_bound(lp), ladder(d, 1, 3) + 0.5);
    REQUIRE(ev.size() == 4);
    for (int n = 0; n < 4; ++n) {
      CHECK(std::abs(ev[n].lambda - ladder(d, 1, n)) < 1e-6);
      double rq = rayleigh_quotient(lp, solve_EF(lp, ev[n].lambda));
      CHECK(std::abs(rq - ev[n].lambda) < 1e-6 * std::max(1.0, std::abs(ev[n].lambda)));
    }
  }
  // k = 6 in d = 3 gives gamma = 2.
  auto lp = constant_problem(p, 3, 6, 0.0);
  auto ev = find_eigenvalues(lp, form_lower_bound(lp), 5.0);
  REQUIRE(ev.size() >= 2);
  CHECK(std::abs(ev[0].lambda - ladder(3, 2, 0)) < 1e-6);
  CHECK(std::abs(ev[1].lambda - ladder(3, 2, 1)) < 1e-6);
}

TEST_CASE("zero counts for a constant profile") {
  auto p = TargetSurfaceProfile::sphere();
  auto lp = constant_problem(p, 3, 2, 0.0);
  double ground = ladder(3, 1, 0);
  CHECK(count_zeros(solve_EF(lp, ground - 0.5)) == 0);
  CHECK(count_zeros(solve_EF(lp, ground + 0.5)) == 1);
  CHECK(count_zeros(solve_EF(lp, ground + 1.5)) == 2);
  CHECK(count_zeros(solve_EF(lp, 40.0)) >= 1);
  CHECK(eigenvalue_count_below(lp, form_lower_bound(lp)) == 0);
  CHECK_THROWS_AS(translation_mode_check(lp), Error);
}

TEST_CASE("zero count is nondecreasing and steps by one") {
  auto p = TargetSurfaceProfile::sphere();
  auto lp = make_problem(p, profile(3, 100.0));
  int prev = eigenvalue_count_below(lp, form_lower_bound(lp));
  CHECK(prev == 0);
  for (double E = -700; E <= 6; E += 0.25) {
    int n = eigenvalue_count_below(lp, E);
    CHECK(n >= prev);
    CHECK(n <= prev + 1);
    prev = n;
  }
}

TEST_CASE("origin exponents") {
  auto p = TargetSurfaceProfile::sphere();
  for (int d = 3; d <= 9; ++d)
    for (double a : {0.0, 1.0, 30.0}) {
      auto lp = a == 0.0 ? constant_problem(p, d, d - 1, 0.0) : make_problem(p, profile(d, a));
      CHECK(lp.gamma1 < 0);
      CHECK(lp.gamma2 > 0);
      CHECK(std::abs(lp.gamma1 + lp.gamma2 + (d - 2)) < 1e-12);
      CHECK(std::abs(lp.gamma1 * lp.gamma2 + lp.kdG(0.0)) < 1e-12 * std::max(1.0, lp.kdG(0.0)));
    }
}

TEST_CASE("translation mode") {
  auto p = TargetSurfaceProfile::sphere();
  for (auto [d, a] : std::vector<std::pair<int, double>>{{7, 1.0}, {7, 30.0}, {3, 1.0}, {3, 10.0}, {3, 100.0}}) {
    auto lp = make_problem(p, profile(d, a));
    auto tc = translation_mode_check(lp);
    CHECK(tc.residual < 1e-6);
    // Oracle: sign changes of psi' counted directly on the trajectory nodes.
    int ext = 0;
    for (size_t i = 1; i < lp.psi.dh.size(); ++i)
      if ((lp.psi.dh[i] > 0) != (lp.psi.dh[i - 1] > 0)) ++ext;
    CHECK(tc.extrema == ext);
    CHECK(tc.zeros == ext);
    CHECK(eigenvalue_count_below(lp, 1.0) == ext);
  }
}

TEST_CASE("monotone d = 7 profile has no eigenvalue below one") {
  auto p = TargetSurfaceProfile::sphere();
  auto lp = make_problem(p, profile(7, 1.0));
  auto ev = find_eigenvalues(lp, form_lower_bound(lp), 8.0);
  REQUIRE_FALSE(ev.empty());
  CHECK(ev.front().lambda >= 1.0);
}

TEST_CASE("decay exponents") {
  auto p = TargetSurfaceProfile::sphere();
  auto mono = decay_exponent(make_problem(p, profile(3, 1.0)));
  CHECK(mono.n_below_one == 0);
  CHECK_FALSE(mono.growing);
  REQUIRE(mono.exponents.size() == 1);
  CHECK(mono.exponents[0] == doctest::Approx(-0.5));

  ShootSpec s;
  s.d = 4;
  s.k = 3;
  s.a = 10;
  auto t4 = integrate(p, s);
  auto lp4 = make_problem(p, t4);
  auto r4 = decay_exponent(lp4);
  CHECK(r4.n_below_one == extremum_count(t4));
  if (r4.n_below_one == 1) {
    CHECK(r4.growing);
    CHECK(r4.exponents[0] == doctest::Approx(r4.gammas[0]));
    CHECK(r4.gammas[0] > 0);
  }

  auto two = decay_exponent(make_problem(p, profile(3, 100.0)));
  CHECK(two.n_below_one == 2);
  CHECK(two.exponents.size() == 2);
  for (size_t j = 0; j < two.gammas.size(); ++j) CHECK(two.gammas[j] == doctest::Approx(1 - two.eigenvalues[j]));
}

TEST_CASE("weighted Poincare inequality on random compactly supported functions") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    int d = 3 + static_cast<int>(U(rng) * 6);
    double R = 1 + 7 * U(rng);
    double c1 = U(rng) - 0.5, c2 = U(rng) - 0.5, f = 1 + 4 * U(rng);
    // w = (R - rho)^2 rho^2 (1 + c1 sin(f rho) + c2 rho) on [0, R], zero beyond.
    auto w = [&](double x) { return (R - x) * (R - x) * x * x * (1 + c1 * std::sin(f * x) + c2 * x); };
    double lhs = 0, rhs = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      double x = R * (i + 0.5) / n, h = R / n, eps = 1e-6;
      double mu = std::exp(x * x / 4) * std::pow(x, d - 1) * h;
      double dw = (w(x + eps) - w(x - eps)) / (2 * eps);
      lhs += x * x * w(x) * w(x) * mu;
      rhs += dw * dw * mu;
    }
    CHECK(lhs <= 16 * rhs);
  }
}
