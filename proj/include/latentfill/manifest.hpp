#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace latentfill {

inline constexpr const char* kToolVersion = "latentfill 0.1.0";

/// FNV-1a of a file's bytes, hex-encoded. Content fingerprint for manifests.
std::uint64_t file_fnv64(const std::string& path);
std::string hex64(std::uint64_t v);

/// Record of one CLI run: resolved configuration, input/output fingerprints,
/// seeds. Two runs with equal manifests (minus wall time) produce
/// bit-identical outputs.
struct RunManifest {
  std::string command;
  nlohmann::json config;  // fully resolved flag values
  std::vector<std::pair<std::string, std::string>> inputs;   // path, hash
  std::vector<std::pair<std::string, std::string>> outputs;  // path, hash
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  nlohmann::json to_json() const;
  void save(const std::string& path) const;
};

}  // namespace latentfill
