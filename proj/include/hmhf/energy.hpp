#pragma once

#include <cstdint>
#include <vector>

#include "hmhf/geometry.hpp"

namespace hmhf {

// Piecewise linear radial field on a grid starting at r = 0 or r > 0.
struct RadialField {
  std::vector<double> r, f;
  bool fixed_end = true;       // f(r.back()) is held fixed by the minimizer
  double support = INFINITY;   // f = 0 beyond this radius

  double value(double x) const;
};

// Grid for the weighted problem: node 0, geometric from r_geo to 1, uniform from 1 to R.
std::vector<double> energy_grid(double R = 12.0, int n = 4000, double r_geo = 1e-5);
RadialField sample(const std::vector<double>& r, double (*fn)(double));

// (c_d / 2) int [h'^2 + k g^2(h) / r^2] r^{d-1} dr over the field's range.
double dirichlet_energy(const RadialField& h, int d, double k, const TargetSurfaceProfile& p);

// E_lambda(f) = int [f'^2 + k (g^2(s* + f) - g^2(s*)) / r^2] r^{d-1} e^{lambda r^2/4} dr; lambda = 1 is E-bar.
double weighted_energy(const RadialField& f, double s_star, int d, double k, const TargetSurfaceProfile& p,
                       double lambda = 1.0);

struct ScalingCheck {
  double E_lambda = 0.0;
  double E_bar_scaled = 0.0;  // lambda^{-(d-2)/2} E-bar(f(./sqrt(lambda))) on the scaled grid
  double residual = 0.0;      // relative
};
ScalingCheck scaled_energy_identity(const RadialField& f, double lambda, double s_star, int d, double k,
                                    const TargetSurfaceProfile& p);

// Lower bound int f'^2 dmu - C R^{-2} int_R f^2 r^{d-1} e^{r^2/4} - C(R), C = k sup|(g^2)''|,
// C(R) = k g^2(s*) int_0^R r^{d-3} e^{r^2/4}, using the quadrature of weighted_energy.
double energy_lower_bound(const RadialField& f, double R, double s_star, int d, double k,
                          const TargetSurfaceProfile& p);

// Discrete divergence-form residual of the expander equation for h, per node, in units of h''
// relative to the larger of one and the size of the terms it balances, net of rounding noise.
std::vector<double> divergence_form_residual(const RadialField& h, int d, double k, const TargetSurfaceProfile& p);

struct MinimizeOptions {
  double tol = 1e-8;  // sup of the normalized Euler-Lagrange residual
  int max_iter = 400;
};

struct Minimizer {
  RadialField f;
  double energy = 0.0;
  double el_residual = 0.0;   // sup over interior nodes of the normalized gradient
  double ode_residual = 0.0;  // sup of the divergence-form residual of s* + f
  int iterations = 0;
  bool equator = false;  // stable equator returned after descent from init stalled above it
};

// Default init is the bump -0.3 exp(-(r - 1)^2) on energy_grid(). When -4 k G'(s*) <= (d-2)^2 the
// equator is returned if descent does not reach energy <= 0.
Minimizer minimize_weighted_energy(double s_star, int d, double k, const TargetSurfaceProfile& p,
                                   const RadialField* init = nullptr, const MinimizeOptions& opt = {});

struct HardyResult {
  double best_ratio = 0.0;
  double target = 0.0;                // (d-2)^2 / 4
  std::vector<double> trial_ratios;   // random starts before and after inverse iteration
  double weighted_max_ratio = 0.0;    // max sampled int f^2 (1+r^2) r^{d-3} e^{r^2/4} / int f'^2 r^{d-1} e^{r^2/4}
};
HardyResult hardy_rayleigh(int d, int trials, std::uint64_t seed = 1);

// Quotient int w'^2 r^{d-1} / int w^2 r^{d-3} of the interpolant of w = r^alpha - 1,
// alpha = -(d-2)/2 + eps, in the finite element space used by hardy_rayleigh.
double hardy_trial_quotient(int d, double eps);

}  // namespace hmhf
