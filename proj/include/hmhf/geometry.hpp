#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmhf/errors.hpp"

namespace hmhf {

struct Domain {
  bool periodic = true;
  double period = 0.0;  // used when periodic
  double lo = 0.0;      // used when not periodic
  double hi = 0.0;
};

// Derivatives g, g', g'', g''', g'''' at s.
using Jet = std::array<double, 5>;

// Metric profile g of a rotationally symmetric target ds^2 + g^2(s) dw^2.
class TargetSurfaceProfile {
 public:
  using Evaluator = std::function<Jet(double)>;

  TargetSurfaceProfile(std::string name, Evaluator eval, Domain domain);

  static TargetSurfaceProfile sphere();
  static TargetSurfaceProfile perturbed_sphere(double epsilon);
  // Periodic cubic spline through (knots[i], values[i]); knots span less than one period.
  static TargetSurfaceProfile spline(const std::vector<double>& knots, const std::vector<double>& values,
                                     double period, double pole_tol = 1e-3);

  const std::string& name() const { return name_; }
  const Domain& domain() const { return domain_; }

  Jet jet(double s) const { return eval_(s); }
  double g(double s) const { return eval_(s)[0]; }
  double dg(double s) const { return eval_(s)[1]; }
  // G = g g' and its derivatives.
  double G(double s) const;
  double dG(double s) const;
  double d2G(double s) const;
  double d3G(double s) const;

  double sup_g() const { return sup_g_; }
  double sup_G() const { return sup_G_; }
  // sup |d^2(g^2)/ds^2| = 2 sup |G'|
  double sup_d2g2() const { return sup_d2g2_; }
  double min_dG() const { return min_dG_; }
  const std::vector<double>& poles() const { return poles_; }

  // Sampling window covering one period (or the interval).
  double window_lo() const;
  double window_hi() const;
  // Sample count used for grid searches over one period.
  static constexpr int kGridPerPeriod = 10000;

 private:
  void scan();

  std::string name_;
  Evaluator eval_;
  Domain domain_;
  double sup_g_ = 0.0, sup_G_ = 0.0, sup_d2g2_ = 0.0, min_dG_ = 0.0;
  std::vector<double> poles_;
};

struct Eigenmap {
  int d = 3;
  int l = 1;
  double k = 2.0;
};

Eigenmap eigenmap_eigenvalue(int d, int l);

enum class LevelKind { Pole, Equator, MinimalSphere };
const char* to_string(LevelKind k);

struct Level {
  double s = 0.0;
  LevelKind kind = LevelKind::Pole;
  double dG = 0.0;
};

using LevelClassification = std::vector<Level>;

LevelClassification classify_levels(const TargetSurfaceProfile& p, double lo, double hi);

enum class Verdict { GloballyMinimising, LocallyMinimising, NotLocallyMinimising, Indeterminate };
const char* to_string(Verdict v);

struct CriterionReport {
  Verdict verdict = Verdict::Indeterminate;
  double s_star = 0.0;
  double lhs = 0.0;        // -4 k G'(s*)
  double rhs = 0.0;        // (d-2)^2
  double S = 0.0;          // 2 sqrt(k)/(d-2) * |g|_inf
  double theta = 0.0;      // max(-G')
  double max_lhs_on_window = 0.0;
  bool c1 = false;
  bool c2 = false;
};

constexpr double kCriterionTol = 1e-10;

CriterionReport minimizing_criterion(const TargetSurfaceProfile& p, const Eigenmap& e, double s_star);
bool check_condition_C1(const TargetSurfaceProfile& p, double s_star);
bool check_condition_C2(const TargetSurfaceProfile& p, const Eigenmap& e);

// Nearest equator above s0 within one period.
double next_equator(const TargetSurfaceProfile& p, double s0);
// Largest value of -G' over the sampled domain.
double theta(const TargetSurfaceProfile& p);

}  // namespace hmhf
