#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace romgait {

std::string sha256_file(const std::string& path);
std::string sha256_bytes(const void* data, std::size_t n);
std::string iso_utc_now();

inline constexpr const char* kToolVersion = "romgait 0.1.0";

// Reproducibility record written next to every command's outputs. Inputs are
// content-hashed; the resolved configuration is dumped in full.
struct RunManifest {
  std::string command;
  std::string tool_version = kToolVersion;
  std::string created_utc;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> resolved_config;
  std::map<std::string, std::string> input_hashes;  // path -> sha256
  std::vector<std::string> outputs;

  void add_input(const std::string& path);
  void write(const std::string& path) const;
};

}  // namespace romgait
