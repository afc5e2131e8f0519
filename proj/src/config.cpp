#include "hmhf/config.hpp"

#include <set>

#include <json.hpp>

#include "hmhf/errors.hpp"

namespace hmhf {

using nlohmann::json;

TargetSurfaceProfile make_profile(const ManifoldSpec& m) {
  if (m.type == "sphere") return TargetSurfaceProfile::sphere();
  if (m.type == "perturbed_sphere") return TargetSurfaceProfile::perturbed_sphere(m.epsilon);
  if (m.type == "spline") return TargetSurfaceProfile::spline(m.knots, m.values, m.period);
  throw SchemaError("/manifold/type", "unknown manifold type");
}

const char* to_string(Command c) {
  switch (c) {
    case Command::Criterion: return "criterion";
    case Command::Profile: return "profile";
    case Command::Atlas: return "atlas";
    case Command::Multiplicity: return "multiplicity";
    case Command::Spectrum: return "spectrum";
    case Command::Evolve: return "evolve";
  }
  return "?";
}

namespace {

const json& require(const json& j, const std::string& key, const std::string& base) {
  if (!j.contains(key)) throw SchemaError(base + "/" + key, "required");
  return j.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "must be an integer");
  return v.get<int>();
}

double positive(const json& v, const std::string& path) {
  double x = number(v, path);
  if (!(x > 0)) throw SchemaError(path, "must be positive");
  return x;
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "must be an array");
  std::vector<double> out;
  for (size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "/" + std::to_string(i)));
  return out;
}

ManifoldSpec parse_manifold(const json& j) {
  if (!j.is_object()) throw SchemaError("/manifold", "must be an object");
  ManifoldSpec m;
  m.type = string(require(j, "type", "/manifold"), "/manifold/type");
  std::set<std::string> allowed{"type"};
  if (m.type == "sphere") {
  } else if (m.type == "perturbed_sphere") {
    m.epsilon = number(require(j, "epsilon", "/manifold"), "/manifold/epsilon");
    allowed.insert("epsilon");
  } else if (m.type == "spline") {
    m.knots = numbers(require(j, "knots", "/manifold"), "/manifold/knots");
    m.values = numbers(require(j, "values", "/manifold"), "/manifold/values");
    m.period = positive(require(j, "period", "/manifold"), "/manifold/period");
    if (m.knots.size() != m.values.size() || m.knots.size() < 4)
      throw SchemaError("/manifold/values", "needs one value per knot and at least four knots");
    allowed.insert({"knots", "values", "period"});
  } else {
    throw SchemaError("/manifold/type", "unknown manifold type");
  }
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw SchemaError("/manifold/" + key, "unknown key");
  return m;
}

Command parse_command(const std::string& s) {
  for (Command c : {Command::Criterion, Command::Profile, Command::Atlas, Command::Multiplicity, Command::Spectrum,
                    Command::Evolve})
    if (s == to_string(c)) return c;
  throw SchemaError("/command", "unknown command");
}

const std::set<std::string> kExperiments{"consistency", "dissipation", "linear", "slice", "pole", "weak"};

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("", "must be an object");
  const std::set<std::string> known{"manifold", "d",         "l",          "command",    "s",            "a_min",
                                    "a_max",    "K",         "E_hi",       "threshold",  "horizon",      "experiment",
                                    "profile_file", "rtol",  "atol",       "out",        "seed"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw SchemaError("/" + key, "unknown key");

  RunConfig c;
  c.manifold = parse_manifold(require(j, "manifold", ""));
  c.d = integer(require(j, "d", ""), "/d");
  if (c.d < 3) throw SchemaError("/d", "must be at least 3");
  if (j.contains("l")) {
    c.l = integer(j["l"], "/l");
    if (c.l < 1) throw SchemaError("/l", "must be at least 1");
  }
  c.command = parse_command(string(require(j, "command", ""), "/command"));
  if (j.contains("s")) c.s = number(j["s"], "/s");
  if (j.contains("a_min")) c.a_min = positive(j["a_min"], "/a_min");
  if (j.contains("a_max")) c.a_max = positive(j["a_max"], "/a_max");
  if (c.a_max <= c.a_min) throw SchemaError("/a_max", "must exceed a_min");
  if (j.contains("K")) {
    c.K = integer(j["K"], "/K");
    if (c.K < 1) throw SchemaError("/K", "must be at least 1");
  }
  if (j.contains("E_hi")) c.E_hi = number(j["E_hi"], "/E_hi");
  if (j.contains("threshold")) c.threshold = number(j["threshold"], "/threshold");
  if (j.contains("horizon")) c.horizon = positive(j["horizon"], "/horizon");
  if (j.contains("experiment")) c.experiment = string(j["experiment"], "/experiment");
  if (j.contains("profile_file")) c.profile_file = string(j["profile_file"], "/profile_file");
  if (j.contains("rtol")) c.rtol = positive(j["rtol"], "/rtol");
  if (j.contains("atol")) c.atol = positive(j["atol"], "/atol");
  if (j.contains("out")) c.out = string(j["out"], "/out");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SchemaError("/seed", "must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  switch (c.command) {
    case Command::Profile:
      if (!c.s) throw SchemaError("/s", "required");
      break;
    case Command::Multiplicity:
      if (!j.contains("K")) throw SchemaError("/K", "required");
      break;
    case Command::Spectrum:
      if (c.profile_file.empty()) throw SchemaError("/profile_file", "required");
      break;
    case Command::Evolve:
      if (c.experiment.empty()) throw SchemaError("/experiment", "required");
      if (!kExperiments.count(c.experiment)) throw SchemaError("/experiment", "unknown experiment");
      break;
    default:
      break;
  }
  return c;
}

std::string config_json(const RunConfig& c) {
  json m{{"type", c.manifold.type}};
  if (c.manifold.type == "perturbed_sphere") m["epsilon"] = c.manifold.epsilon;
  if (c.manifold.type == "spline") {
    m["knots"] = c.manifold.knots;
    m["values"] = c.manifold.values;
    m["period"] = c.manifold.period;
  }
  json j{{"manifold", m},       {"d", c.d},         {"l", c.l},         {"command", to_string(c.command)},
         {"a_min", c.a_min},    {"a_max", c.a_max}, {"K", c.K},         {"E_hi", c.E_hi},
         {"threshold", c.threshold}, {"horizon", c.horizon}, {"rtol", c.rtol}, {"atol", c.atol},
         {"out", c.out},        {"seed", c.seed}};
  if (c.s) j["s"] = *c.s;
  if (!c.experiment.empty()) j["experiment"] = c.experiment;
  if (!c.profile_file.empty()) j["profile_file"] = c.profile_file;
  return j.dump(2) + "\n";
}

}  // namespace hmhf
