#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmhf/geometry.hpp"

namespace hmhf {

struct ManifoldSpec {
  std::string type = "sphere";  // sphere | perturbed_sphere | spline
  double epsilon = 0.0;
  std::vector<double> knots, values;
  double period = 2 * M_PI;
};

TargetSurfaceProfile make_profile(const ManifoldSpec& m);

enum class Command { Criterion, Profile, Atlas, Multiplicity, Spectrum, Evolve };
const char* to_string(Command c);

struct RunConfig {
  ManifoldSpec manifold;
  int d = 3;
  int l = 1;
  Command command = Command::Criterion;
  std::optional<double> s;     // target level (profile); equator override (criterion, multiplicity)
  double a_min = 1e-3;
  double a_max = 1e4;
  int K = 1;
  double E_hi = 3.0;           // spectrum search window top
  double threshold = 1.0;
  double horizon = 10.0;
  std::string experiment;      // evolve
  std::string profile_file;    // spectrum: JSON written by the profile command
  double rtol = 1e-11;
  double atol = 1e-13;
  std::string out = "out";
  std::uint64_t seed = 1;
};

// Throws SchemaError with a JSON pointer to the offending field.
RunConfig parse_config(const std::string& text);
std::string config_json(const RunConfig& c);

}  // namespace hmhf
