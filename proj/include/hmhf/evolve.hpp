#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hmhf/shooting.hpp"

namespace hmhf {

// Physical: h_t = h_rr + (d-1)/r h_r - k S / r^2 in (r, t).
// SelfSimilar: w_s = w'' + ((d-1)/rho + rho/2) w' - k S / rho^2 in (rho, sigma = log t).
enum class Chart { Physical, SelfSimilar };
enum class Scheme { BackwardEuler, BDF2 };

// Nonlinear term S(r, t, f) of the equation with dS/df and a primitive P, dP/df = 2 S. The evolved
// field is base + f; keeping f small near the outer edge matters in the self-similar chart, where
// the weight reaches e^{56}. Sources keep a reference to the target profile.
struct Source {
  std::string name;
  double base = 0.0;
  std::function<double(double, double, double)> S, dS, P;
};

// Field s_ref + f: S = G(s_ref + f), P = g^2(s_ref + f) - g^2(s_ref).
Source full_source(const TargetSurfaceProfile& p, double s_ref);
// S = G(s* + f) - G(s*).
Source perturbation_source(const TargetSurfaceProfile& p, double s_star);
// S = c f / k, so the equation carries c / r^2.
Source linear_source(double c, double k);
// S = G(psi + f) - G(psi) around psi(r / sqrt t) (physical) or psi(rho) (self-similar).
// The profile must outlive the source.
Source background_source(const TargetSurfaceProfile& p, const Trajectory& psi, Chart chart);

// psi(x), continued past r_max by the 1/x^2 tail towards the estimated limit.
double profile_at(const Trajectory& psi, double x);

// Node 0 at the origin, then geometric from r_min with ratio q; spacing is frozen once it reaches
// q - 1 times uniform_from. The last node is r_max.
std::vector<double> evolution_grid(double r_max, double q = 1.01, double r_min = 1e-4,
                                   double uniform_from = INFINITY);
// Inserts the midpoint of every cell.
std::vector<double> refine_grid(const std::vector<double>& r);

struct Monitor {
  double t = 0.0;
  double L2 = 0.0;           // of f - background in the chart weight
  double Linf = 0.0;
  double energy = 0.0;       // Ebar in the self-similar chart, the Dirichlet-type energy otherwise
  double dirichlet = 0.0;    // int f'^2 in the chart weight
  double dissipation = 0.0;  // 2 |(f_new - f_old) / dt|^2 over the step ending at t
};

// P1 elements with lumped mass on r[0] = 0 < ... < r.back(). The semi-discrete flow is the gradient
// flow of the discrete energy, so the energy identity holds exactly before time stepping.
struct EvolutionState {
  Chart chart = Chart::Physical;
  Scheme scheme = Scheme::BDF2;
  int d = 3;
  double k = 2.0;
  std::vector<double> r, f;  // the field is source.base + f
  double t = 0.0;
  Source source;
  std::function<double(double)> outer;  // Dirichlet value at r.back(); the origin value is held
  double background = 0.0;
  std::vector<Monitor> monitor;

  std::vector<double> edge;   // int over cell of the weight / h^2
  std::vector<double> mass;   // lumped weight
  std::vector<double> pmass;  // lumped weight / r^2
  std::vector<double> f_prev;
  double dt_prev = 0.0;
  int steps = 0;
};

// f0 is measured from source.base. The outer Dirichlet value defaults to f0.back(), which is also the
// background the norms are measured against.
EvolutionState make_state(Chart chart, int d, double k, std::vector<double> r, std::vector<double> f0, double t0,
                          Source source, Scheme scheme = Scheme::BDF2);

double discrete_energy(const EvolutionState& s);
Monitor measure(const EvolutionState& s);

// One implicit step; Newton on the tridiagonal system. Throws StepRejected when Newton fails or the
// field stops being finite.
void step(EvolutionState& s, double dt);
void step_physical(EvolutionState& s, double dt);
void step_selfsimilar(EvolutionState& s, double dsigma);
// n equal steps to t_end.
void advance(EvolutionState& s, double t_end, int n);

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at);

struct EnergyReport {
  bool non_increasing = true;
  double max_increase = 0.0;          // largest E_{n+1} - E_n
  double dissipation_residual = 0.0;  // sup_n |E_n - E_0 + sum of dissipation * dt|
  double scale = 0.0;                 // sup |E_n|
};
EnergyReport energy_monitor(const EvolutionState& s);

struct DissipationCheck {
  EnergyReport coarse;
  double scheme_error = 0.0;  // sup over common times of |E_coarse - E_half_step|
  bool pass = false;          // non-increasing and residual < 10 scheme_error
};
DissipationCheck dissipation_check(const EvolutionState& initial, double sigma_end, int n);

struct ConsistencyReport {
  double error = 0.0;        // sup_r |h(r, t1) - psi(r / sqrt t1)| on the coarse run
  double estimate = 0.0;     // sup over coarse nodes of |coarse - refined| (grid and step halved)
  double fine_error = 0.0;
};
struct ConsistencyOptions {
  double q = 1.01;
  int steps = 300;
  double r_min = 1e-4;
};
ConsistencyReport selfsimilar_consistency(const TargetSurfaceProfile& p, const Trajectory& psi, double t0,
                                          double t1, const ConsistencyOptions& opt = {});

struct PoleStabilityReport {
  double c = 0.0;          // k G'(s*), or its infimum along a moving background
  double f0_sup = 0.0;
  double sup = 0.0;        // sup over the run of |f(t)|_inf
  double forcing = 0.0;    // sup over the run of |r^2 F|_inf = |k G(s* + f) - k G(s*) - c f|_inf
  double bound = 0.0;      // f0_sup + forcing / c
  bool within_bound = false;
  EvolutionState run;
};
struct PoleOptions {
  int steps = 1000;
  double q = 1.01;
  const Trajectory* background = nullptr;  // moving background psi(r / sqrt t), t from t0 = 1
};
PoleStabilityReport pole_stability_experiment(const TargetSurfaceProfile& p, const Eigenmap& e, double s_star,
                                              const std::function<double(double)>& f0, double horizon,
                                              const PoleOptions& opt = {});

struct WeakEnergyReport {
  bool applicable = false;  // k inf G' > -(d-2)^2 / 4
  double ratio = 0.0;       // (sup |f|_2^2 + int |grad f|_2^2 dt) / |f0|_2^2
  double C = 0.0;
  bool holds = false;
};
// With eps = k inf G' + (d-2)^2/4 > 0 the a priori estimate gives C = 1 + 1/(2 theta),
// theta = min(1, 4 eps / (d-2)^2). Without the gap no constant exists and C must be supplied.
WeakEnergyReport weak_energy_inequality_check(const EvolutionState& run, double inf_dG,
                                              std::optional<double> C = std::nullopt);

struct GrowthReport {
  double growth = 0.0;  // L2(t1) / L2(t0)
  EvolutionState run;
};
// Evolves f = psi(r / sqrt t) - s* from t0 with the perturbation source around s*.
GrowthReport expander_slice_growth(const TargetSurfaceProfile& p, const Trajectory& psi, double s_star,
                                   double t0, double t1, int steps, double q = 1.01);

std::string run_log_csv(const EvolutionState& s);
std::string snapshot_csv(const EvolutionState& s);

}  // namespace hmhf
