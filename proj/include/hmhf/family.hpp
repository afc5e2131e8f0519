#pragma once

#include <cstdint>
#include <vector>

#include "hmhf/shooting.hpp"

namespace hmhf {

// Smallest integer D >= d with 4 k Theta <= (D-2)^2, and the radius R = 2 sqrt(D - d) beyond which a
// trajectory meets an equator at most once.
struct SafeRadius {
  int D = 3;
  double theta = 0.0;
  double R = 0.0;
};
SafeRadius safe_radius(const TargetSurfaceProfile& p, int d, double k);

struct FamilyConfig {
  int d = 3;
  double k = 2.0;
  double s0 = 0.0;       // pole or minimal sphere the family starts from
  double s_star = 0.0;   // equator level being counted
  ShootSpec shoot;       // tolerances and r_max; d, k, s0, a are overwritten
  double a_min = 1e-3;
  double a_max = 1e4;
  int per_decade = 64;
  unsigned threads = 0;  // 0 picks the hardware concurrency
};

FamilyConfig family_config(const TargetSurfaceProfile& p, const Eigenmap& e, double s0 = 0.0);
Trajectory shoot(const TargetSurfaceProfile& p, const FamilyConfig& c, double a);

struct LimitEstimate {
  double limit = 0.0;
  double bound = 0.0;
};
LimitEstimate limit_map(const TargetSurfaceProfile& p, const FamilyConfig& c, double a);

struct CrossingCount {
  int count = 0;          // counted crossings, at most one of them beyond R
  int raw = 0;            // every detected sign change, including the tail correction
  int beyond_R = 0;       // detected sign changes at r > R
  double last_r = 0.0;    // location of the last detected crossing (inf if beyond r_max)
};
// Sign changes of h - s_star. Throws TangencySuspected when h touches the level without crossing.
CrossingCount intersection_count(const Trajectory& t, double s_star, double R);

struct SweepRecord {
  double a = 0.0;
  double L = 0.0;
  double Lbound = 0.0;
  double M = 0.0;
  int I = 0;
};

struct JumpPoint {
  int n = 0;
  double a_lo = 0.0;  // I(a_lo) = n
  double a_hi = 0.0;  // I(a_hi) = n + 1
  double L = 0.0;     // limit at a_lo
  double bound = 0.0;
};

struct FamilySweep {
  double s0 = 0.0;
  double s_star = 0.0;
  SafeRadius safe;
  std::vector<SweepRecord> records;  // sorted by a
  std::vector<JumpPoint> jumps;
};

// Geometric sweep over [a_min, a_max]; the grid is extended by whole decades (up to 1e9) until the
// largest crossing count reaches min_I.
FamilySweep sweep_family(const TargetSurfaceProfile& p, const FamilyConfig& c, int min_I = 0);
std::vector<JumpPoint> find_jump_points(const TargetSurfaceProfile& p, const FamilyConfig& c,
                                        FamilySweep& sweep, int n_max);

Trajectory solve_initial_data(const TargetSurfaceProfile& p, const FamilyConfig& c, double s, double a_lo,
                              double a_hi, double tol = 1e-9);

struct ProfileMember {
  double a = 0.0;
  int crossings = 0;
  double limit_residual = 0.0;
  double ode_residual = 0.0;
  Trajectory traj;
};

struct ProfileSet {
  double s = 0.0;
  std::vector<ProfileMember> members;
};

struct MultiplicityWindow {
  double lo = 0.0;
  double hi = 0.0;
  ProfileSet exemplars;
  FamilySweep sweep;
};
MultiplicityWindow multiplicity_window(const TargetSurfaceProfile& p, const Eigenmap& e, double s_star, int K,
                                       FamilyConfig c);

struct UniquenessReport {
  bool refused = false;
  bool pass = false;
  std::string reason;
  std::vector<double> levels;   // sampled target levels
  std::vector<int> roots;       // sign changes of L - s on the sweep, per level
  std::vector<std::string> witnesses;
};
UniquenessReport uniqueness_audit(const TargetSurfaceProfile& p, const Eigenmap& e, std::uint64_t seed,
                                  int n_levels = 16);

}  // namespace hmhf
