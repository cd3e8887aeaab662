#include "latentfill/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "latentfill/rng.hpp"

namespace latentfill {

std::uint64_t file_fnv64(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for hashing");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  return fnv1a64(bytes.data(), bytes.size());
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

void RunManifest::add_input(const std::string& path) {
  inputs.emplace_back(path, hex64(file_fnv64(path)));
}

void RunManifest::add_output(const std::string& path) {
  outputs.emplace_back(path, hex64(file_fnv64(path)));
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [path, hash] : v) arr.push_back({{"path", path}, {"fnv64", hash}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  j["wall_time_ms"] = wall_time_ms;
  return j;
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write manifest");
  out << to_json().dump(2) << '\n';
}

}  // namespace latentfill
