#include "latentfill/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace latentfill {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

Rng::Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

Rng Rng::substream(std::string_view name) const { return substream(seed_, name); }

Rng Rng::substream(std::uint64_t master, std::string_view name) {
  std::uint64_t h = fnv1a64(&master, sizeof(master));
  h = fnv1a64(name.data(), name.size(), h);
  return Rng(h);
}

std::uint64_t Rng::next_u64() { return eng_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal(double mean, double sd) {
  // Box-Muller, cosine branch only; u1 nudged away from 0 so log is finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + sd * r * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: hi < lo");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::string Rng::state() const {
  std::ostringstream os;
  os << seed_ << ' ' << eng_;
  return os.str();
}

void Rng::restore(const std::string& s) {
  std::istringstream is(s);
  is >> seed_ >> eng_;
  if (is.fail()) throw std::runtime_error("Rng::restore: malformed state string");
}

}  // namespace latentfill
