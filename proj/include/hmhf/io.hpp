#pragma once

#include <string>
#include <vector>

namespace hmhf {

std::string sha256_hex(const std::string& data);

struct ManifestEntry {
  std::string name;
  std::string sha256;
  size_t bytes = 0;
};

// Writes files under one directory and records their digests.
class Emitter {
 public:
  explicit Emitter(std::string dir);
  void write(const std::string& name, const std::string& content);
  // manifest.json with entries sorted by name; returns its content.
  std::string finish();
  const std::vector<ManifestEntry>& entries() const { return entries_; }

 private:
  std::string dir_;
  std::vector<ManifestEntry> entries_;
};

std::string read_file(const std::string& path);

}  // namespace hmhf
