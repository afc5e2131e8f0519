#pragma once

#include <string>
#include <vector>

#include "hmhf/geometry.hpp"

namespace hmhf {

enum class Equation { Expander, Harmonic, GeneralDimension };

struct ShootSpec {
  int d = 3;
  double k = 2.0;
  double s0 = 0.0;
  double a = 0.0;
  Equation eq = Equation::Expander;
  int D = 0;  // dimension used by GeneralDimension; ignored otherwise
  double r_max = 20.0;
  double rtol = 1e-11;
  double atol = 1e-13;
  double r0 = 0.0;           // 0 selects the adaptive switch radius
  double limit_tol = 0.05;   // r_max grows until the tail bound is below this (Expander only)
  double r_max_cap = 400.0;
  bool extend = true;
};

int effective_dimension(const ShootSpec& s);

// h(r) = s0 + a r^g (1 + c2 r^2) + b r^{2g} + c r^{3g}
struct SeriesSeed {
  double gamma = 1.0;
  double a = 0.0;
  double s0 = 0.0;
  double c2 = 0.0;
  double b = 0.0;
  double c = 0.0;
  double r0 = 0.0;
  double correction = 0.0;  // relative size of the non-leading terms at r0

  double h(double r) const;
  double dh(double r) const;
  double d2h(double r) const;
};

struct TailEstimate {
  double limit = 0.0;  // h(r_max) plus the asymptotic 1/r^2 tail expansion
  double raw = 0.0;    // h(r_max)
  double bound = 0.0;  // Cbar / (2 r_max^2), bounds |lim h - h(r_max)|
};

struct Trajectory {
  ShootSpec spec;
  int D = 3;
  SeriesSeed seed;
  std::vector<double> r, h, dh, ddh;  // accepted integrator nodes
  double Cbar = 0.0;
  bool regular_seed = true;  // r h' -> 0 at the origin
  bool bounded = true;
  int extrema = 0;  // sign changes of h'
  double sup_h = 0.0;
  TailEstimate tail;

  double r_max() const { return r.back(); }
  // Value and derivative anywhere in (0, r_max]; the series is used below the first node.
  double value(double x) const;
  double deriv(double x) const;
  size_t size() const { return r.size(); }
};

double local_exponent(int d, double k, double dG0);
SeriesSeed series_seed(const TargetSurfaceProfile& p, const ShootSpec& spec);
Trajectory integrate(const TargetSurfaceProfile& p, const ShootSpec& spec);

// Admissible constant in |h'(r)| <= Cbar / r^3 for r >= 1, given a bound F1 on r^2 h'^2 at r = 1.
double derivative_bound_constant(const TargetSurfaceProfile& p, double k, double F1);
TailEstimate estimate_tail_limit(const TargetSurfaceProfile& p, const Trajectory& t);

struct MonotoneSeries {
  std::vector<double> r, V, Vtilde, F;
  double max_V_increment = 0.0;       // largest V(r_{i+1}) - V(r_i), divided by k |g|^2
  double max_Vtilde_increment = 0.0;  // same for Vtilde, relative to |Vtilde|
};
MonotoneSeries monotone_quantities(const TargetSurfaceProfile& p, const Trajectory& t);

// Largest defect of the divergence form between consecutive nodes, in units of r h'.
double divergence_residual(const TargetSurfaceProfile& p, const Trajectory& t);

bool energy_space_check(const TargetSurfaceProfile& p, const Trajectory& t);

std::string trajectory_csv(const TargetSurfaceProfile& p, const Trajectory& t);

}  // namespace hmhf
