#pragma once

#include <vector>

#include "hmhf/shooting.hpp"

namespace hmhf {

// A v = -v'' - ((d-1)/rho + rho/2) v' + (k/rho^2) G'(psi) v on L^2(e^{rho^2/4} rho^{d-1} drho).
struct LinearizedProblem {
  const TargetSurfaceProfile* profile = nullptr;
  Trajectory psi;
  int d = 3;
  double k = 2.0;
  double rho_max = 15.0;
  double rho0 = 1e-4;
  double gamma1 = 0.0;  // origin exponents, gamma1 < 0 < gamma2
  double gamma2 = 0.0;

  double q(double rho) const;
  double kdG(double rho) const;  // k G'(psi(rho))
};

// The problem copies psi and keeps a pointer to the profile, which must outlive it.
LinearizedProblem make_problem(const TargetSurfaceProfile& p, const Trajectory& psi, double rho_max = 15.0);
// Constant profile psi = s0 at a pole or minimal sphere.
LinearizedProblem constant_problem(const TargetSurfaceProfile& p, int d, double k, double s0,
                                   double rho_max = 15.0);

// Recessive solution at the origin, stored with its largest amplitude scaled to one: the solution
// normalised by rho^{-gamma2}(v + rho v') -> 1 is exp(log_scale) * v.
struct EigenSolution {
  double E = 0.0;
  double log_scale = 0.0;
  std::vector<double> rho, v, dv, ddv;
  std::vector<double> theta;  // Pruefer angle of (v, rho v'); zeros of v are where theta crosses k pi
  std::vector<double> logR;   // log amplitude of (v, rho v') relative to log_scale

  double value(double x) const;
  double deriv(double x) const;
};

EigenSolution solve_EF(const LinearizedProblem& lp, double E);
int count_zeros(const EigenSolution& s);
int eigenvalue_count_below(const LinearizedProblem& lp, double E0);

// Energy below which no eigenvalue lies: starts at min(0, inf q) - 1 when q is bounded below on the
// grid, and is pushed down by doubling until the zero count vanishes there.
double form_lower_bound(const LinearizedProblem& lp);

struct Eigenpair {
  double lambda = 0.0;
  double lo = 0.0, hi = 0.0;  // bracket with N(lo) = j, N(hi) = j + 1
  int index = 0;
};
std::vector<Eigenpair> find_eigenvalues(const LinearizedProblem& lp, double E_lo, double E_hi, double tol = 1e-11);

// <A v, v>_mu / <v, v>_mu as a form integral, cut where the computed solution stops decaying.
double rayleigh_quotient(const LinearizedProblem& lp, const EigenSolution& s);

struct TranslationCheck {
  double residual = 0.0;    // sup |v1/|v1| - rho psi'/|rho psi'|| on [rho0, rho_max/2]
  double A_residual = 0.0;  // sup |(A - 1)(rho psi')| / sup |rho psi'|
  int zeros = 0;            // zeros of v1
  int extrema = 0;          // local extrema of psi
};
TranslationCheck translation_mode_check(const LinearizedProblem& lp);

struct DecayReport {
  int n_below_one = 0;
  std::vector<double> eigenvalues;  // below 1
  std::vector<double> gammas;       // 1 - lambda_j
  std::vector<double> exponents;    // gamma_j + d/2 - 2, or the single bound exponent d/2 - 2
  bool growing = false;
};
DecayReport decay_exponent(const LinearizedProblem& lp);

struct SpectralReport {
  double threshold = 1.0;
  int zero_count = 0;
  std::vector<double> eigenvalues;
  double translation_residual = 0.0;
};
SpectralReport spectral_report(const LinearizedProblem& lp, double threshold, double E_hi);

// Number of local extrema of the profile (sign changes of psi').
int extremum_count(const Trajectory& t);

}  // namespace hmhf
