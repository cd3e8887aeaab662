#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace latentfill {

/// 64-bit FNV-1a over a byte range. Used for content hashes in manifests and
/// for deriving named RNG sub-streams. Not cryptographic.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view s);

/// Deterministic random stream. Wraps std::mt19937_64 but produces uniform
/// and normal variates through fixed bit-level formulas, so sequences are
/// identical across platforms and standard library versions.
///
/// A master seed expands into named sub-streams (hash of seed + name), which
/// keeps every component's randomness independent of the draw order in other
/// components.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Independent stream derived from (seed, name).
  Rng substream(std::string_view name) const;
  static Rng substream(std::uint64_t master, std::string_view name);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal(double mean = 0.0, double sd = 1.0);
  /// Uniform integer on [lo, hi] inclusive.
  int uniform_int(int lo, int hi);
  /// true with probability p.
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_u64() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Serialized engine state; restore() resumes the exact sequence.
  std::string state() const;
  void restore(const std::string& s);

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_ = 0;
};

}  // namespace latentfill
