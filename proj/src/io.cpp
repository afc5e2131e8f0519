#include "hmhf/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "hmhf/errors.hpp"

namespace hmhf {

std::string sha256_hex(const std::string& data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

Emitter::Emitter(std::string dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

void Emitter::write(const std::string& name, const std::string& content) {
  std::ofstream os(std::filesystem::path(dir_) / name, std::ios::binary);
  os << content;
  if (!os) throw Error(Errc::InvalidArgument, "cannot write " + name);
  entries_.push_back({name, sha256_hex(content), content.size()});
}

std::string Emitter::finish() {
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  nlohmann::json files = nlohmann::json::array();
  for (const auto& e : entries_) files.push_back({{"name", e.name}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  std::string text = nlohmann::json{{"files", files}}.dump(2) + "\n";
  std::ofstream(std::filesystem::path(dir_) / "manifest.json", std::ios::binary) << text;
  return text;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::InvalidArgument, "cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace hmhf
