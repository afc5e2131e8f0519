#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hmhf/cli.hpp"
#include "hmhf/errors.hpp"
#include "hmhf/io.hpp"
#include "json.hpp"

using namespace hmhf;
namespace fs = std::filesystem;

namespace {

// Fresh directory under the system temp path, removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("hmhf_test_" + tag);
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SchemaError schema_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const SchemaError& e) {
    return e;
  }
  FAIL("config accepted: " << text);
  return SchemaError("", "");
}

RunConfig config_in(const std::string& text, const fs::path& out) {
  auto j = nlohmann::json::parse(text);
  j["out"] = out.string();
  return parse_config(j.dump());
}

}  // namespace

TEST_CASE("parse_config examples") {
  auto c = parse_config(R"({"manifold":{"type":"sphere"},"d":7,"l":1,"command":"criterion"})");
  CHECK(c.d == 7);
  CHECK(c.l == 1);
  CHECK(c.command == Command::Criterion);
  CHECK(c.manifold.type == "sphere");

  auto e = schema_error(R"({"manifold":{"type":"sphere"},"l":1,"command":"criterion"})");
  CHECK(e.path() == "/d");
  CHECK(e.reason() == "required");

  auto m = parse_config(R"({"command":"multiplicity","K":3,"d":3,"l":1,"manifold":{"type":"sphere"}})");
  CHECK(m.command == Command::Multiplicity);
  CHECK(m.K == 3);
}

TEST_CASE("schema errors carry a pointer to the field") {
  const std::string base = R"("manifold":{"type":"sphere"},"d":3,"l":1)";
  CHECK(schema_error("{" + base + R"(,"command":"criterion","bogus":1})").path() == "/bogus");
  CHECK(schema_error("{" + base + R"(,"command":"fly"})").path() == "/command");
  CHECK(schema_error("{" + base + R"(,"command":"profile"})").path() == "/s");
  CHECK(schema_error("{" + base + R"(,"command":"multiplicity"})").path() == "/K");
  CHECK(schema_error("{" + base + R"(,"command":"spectrum"})").path() == "/profile_file");
  CHECK(schema_error("{" + base + R"(,"command":"evolve","experiment":"nope"})").path() == "/experiment");
  CHECK(schema_error("{" + base + R"(,"command":"criterion","rtol":-1})").path() == "/rtol");
  CHECK(schema_error(R"({"manifold":{"type":"torus"},"d":3,"command":"criterion"})").path() == "/manifold/type");
  CHECK(schema_error(R"({"manifold":{"type":"sphere"},"d":2,"command":"criterion"})").path() == "/d");
  CHECK(schema_error("[1, 2]").path().empty());
  CHECK(schema_error("{not json").reason().rfind("invalid JSON", 0) == 0);
}

TEST_CASE("config round trip") {
  auto c = parse_config(
      R"({"manifold":{"type":"perturbed_sphere","epsilon":0.2},"d":5,"l":2,"command":"atlas","a_min":0.1,"a_max":50,"seed":9})");
  auto again = parse_config(config_json(c));
  CHECK(config_json(again) == config_json(c));
  CHECK(again.manifold.epsilon == 0.2);
  CHECK(again.seed == 9);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("criterion run is deterministic and shows the d >= 7 dichotomy") {
  const std::string text = R"({"manifold":{"type":"sphere"},"d":7,"l":1,"command":"criterion"})";
  TempDir a("crit_a"), b("crit_b");
  std::ostringstream l1, l2, lb;
  run(config_in(text, a.path), l1);
  std::string m1 = read_file((a.path / "manifest.json").string());
  run(config_in(text, a.path), l2);
  CHECK(l1.str() == l2.str());
  CHECK(read_file((a.path / "manifest.json").string()) == m1);
  // A different output directory only changes the echoed config.
  run(config_in(text, b.path), lb);
  for (const char* name : {"criterion.json", "criterion_table.csv"})
    CHECK(read_file((a.path / name).string()) == read_file((b.path / name).string()));

  auto manifest = nlohmann::json::parse(read_file((a.path / "manifest.json").string()));
  for (const auto& f : manifest["files"])
    CHECK(sha256_hex(read_file((a.path / f["name"].get<std::string>()).string())) == f["sha256"]);

  std::istringstream table(read_file((a.path / "criterion_table.csv").string()));
  std::string line;
  std::getline(table, line);
  CHECK(line == "d,l,k,s_star,lhs,rhs,verdict");
  int rows = 0;
  while (std::getline(table, line)) {
    int d = std::stoi(line.substr(0, line.find(',')));
    std::string verdict = line.substr(line.rfind(',') + 1);
    CHECK(verdict == (d >= 7 ? "GloballyMinimising" : "NotLocallyMinimising"));
    ++rows;
  }
  CHECK(rows == 8);
}

TEST_CASE("multiplicity run writes a window report and profile files") {
  TempDir dir("mult");
  std::ostringstream log;
  run(config_in(R"({"command":"multiplicity","K":3,"d":3,"l":1,"manifold":{"type":"sphere"}})", dir.path), log);
  auto manifest = nlohmann::json::parse(read_file((dir.path / "manifest.json").string()));
  int csv = 0;
  bool report = false;
  for (const auto& f : manifest["files"]) {
    auto name = f["name"].get<std::string>();
    if (name.rfind("profile_", 0) == 0 && name.ends_with(".csv")) ++csv;
    if (name == "multiplicity.json") report = true;
  }
  CHECK(csv == 3);
  REQUIRE(report);
  auto j = nlohmann::json::parse(read_file((dir.path / "multiplicity.json").string()));
  REQUIRE(j["profiles"].size() == 3);
  for (const auto& m : j["profiles"]) CHECK(m["limit_residual"].get<double>() < 1e-6);
}

TEST_CASE("module errors propagate with the command name") {
  TempDir dir("err");
  std::ostringstream log;
  // No d = 7 profile reaches the equator or beyond.
  auto c = config_in(R"({"command":"profile","s":2.0,"d":7,"l":1,"manifold":{"type":"sphere"}})", dir.path);
  try {
    run(c, log);
    FAIL("profile run succeeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoBracket);
    CHECK(std::string(e.what()).find("profile") != std::string::npos);
  }
}
