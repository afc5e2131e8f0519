#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmhf/cli.hpp"
#include "hmhf/errors.hpp"
#include "hmhf/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Equivariant harmonic map heat flow: expanders, spectra, and stability runs"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out, manifold = "sphere", profile_file, experiment;
  int d = 0, l = 0, K = 0;
  double s = NAN, a_min = NAN, a_max = NAN, horizon = NAN, epsilon = NAN;
  long long seed = -1;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--d", d, "domain dimension");
  app.add_option("--l", l, "eigenmap degree");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "seed for randomized runs");
  app.add_option("--manifold", manifold, "sphere | perturbed_sphere (without --config)");
  app.add_option("--epsilon", epsilon, "perturbed sphere parameter");

  auto* criterion = app.add_subcommand("criterion", "minimality criterion table");
  criterion->add_option("--s", s, "equator level");
  auto* profile = app.add_subcommand("profile", "profiles with limit s");
  profile->add_option("--s", s, "target level")->required();
  auto* atlas = app.add_subcommand("atlas", "sweep of the limit map");
  for (auto* sub : {profile, atlas}) {
    sub->add_option("--a-min", a_min, "smallest initial slope");
    sub->add_option("--a-max", a_max, "largest initial slope");
  }
  auto* mult = app.add_subcommand("multiplicity", "window with K profiles of distinct crossing counts");
  mult->add_option("--K", K, "number of profiles")->required();
  auto* spec = app.add_subcommand("spectrum", "linearized spectrum of a profile");
  spec->add_option("--profile-file", profile_file, "profile JSON from the profile command")->required();
  auto* evo = app.add_subcommand("evolve", "flow experiments");
  evo->add_option("--experiment", experiment, "consistency | dissipation | linear | slice | pole | weak")->required();
  evo->add_option("--horizon", horizon, "time horizon");
  evo->add_option("--s", s, "profile slope for the consistency run");
  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) j = nlohmann::json::parse(hmhf::read_file(config_path));
    if (!j.contains("manifold")) {
      j["manifold"] = {{"type", manifold}};
      if (manifold == "perturbed_sphere") j["manifold"]["epsilon"] = std::isnan(epsilon) ? 0.2 : epsilon;
    }
    j["command"] = app.get_subcommands().front()->get_name();
    if (d) j["d"] = d;
    if (l) j["l"] = l;
    if (!out.empty()) j["out"] = out;
    if (seed >= 0) j["seed"] = static_cast<std::uint64_t>(seed);
    if (!std::isnan(s)) j["s"] = s;
    if (!std::isnan(a_min)) j["a_min"] = a_min;
    if (!std::isnan(a_max)) j["a_max"] = a_max;
    if (!std::isnan(horizon)) j["horizon"] = horizon;
    if (K) j["K"] = K;
    if (!profile_file.empty()) j["profile_file"] = profile_file;
    if (!experiment.empty()) j["experiment"] = experiment;
    hmhf::run(hmhf::parse_config(j.dump()), std::cout);
  } catch (const hmhf::SchemaError& e) {
    std::cerr << "config " << e.path() << ": " << e.reason() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
