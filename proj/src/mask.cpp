#include "latentfill/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "latentfill/rng.hpp"

namespace latentfill {

Mask::Mask(int h, int w, std::uint8_t fill) : height(h), width(w) {
  if (h <= 0 || w <= 0) {
    throw std::invalid_argument("mask dims must be positive: " + std::to_string(h) + "x" +
                                std::to_string(w));
  }
  known.assign(static_cast<std::size_t>(h) * w, fill);
}

int Mask::missing_count() const {
  int n = 0;
  for (std::uint8_t v : known) n += (v == 0);
  return n;
}

void Mask::validate_for_inpainting() const {
  int miss = 0, kn = 0;
  for (std::uint8_t v : known) {
    if (v != 0 && v != 1) throw std::runtime_error("mask value " + std::to_string(v) + " is not 0/1");
    (v == 0 ? miss : kn) += 1;
  }
  if (miss == 0 || kn == 0) {
    throw std::runtime_error("mask needs at least one known and one missing pixel (known=" +
                             std::to_string(kn) + ", missing=" + std::to_string(miss) + ")");
  }
}

Mask center_mask(int h, int w, double hole_fraction) {
  if (!(hole_fraction > 0.0 && hole_fraction < 1.0)) {
    throw std::invalid_argument("center_mask: hole_fraction must be in (0,1), got " +
                                std::to_string(hole_fraction));
  }
  const int hh = static_cast<int>(std::floor(h * hole_fraction));
  const int ww = static_cast<int>(std::floor(w * hole_fraction));
  if (hh <= 0 || ww <= 0 || (hh >= h && ww >= w)) {
    throw std::invalid_argument("center_mask: degenerate hole " + std::to_string(hh) + "x" +
                                std::to_string(ww) + " for " + std::to_string(h) + "x" +
                                std::to_string(w));
  }
  Mask m(h, w, 1);
  const int top = (h - hh) / 2, left = (w - ww) / 2;
  for (int y = top; y < top + hh; ++y) {
    for (int x = left; x < left + ww; ++x) m.at(y, x) = 0;
  }
  return m;
}

Mask random_mask(int h, int w, double missing_fraction, std::uint64_t seed) {
  if (!(missing_fraction > 0.0 && missing_fraction < 1.0)) {
    throw std::invalid_argument("random_mask: missing_fraction must be in (0,1)");
  }
  const int total = h * w;
  const int n_missing = static_cast<int>(std::floor(total * missing_fraction));
  Mask m(h, w, 1);
  std::vector<int> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::substream(seed, "random-mask");
  rng.shuffle(idx);
  for (int i = 0; i < n_missing; ++i) m.known[static_cast<std::size_t>(idx[i])] = 0;
  return m;
}

namespace {

// Separable Gaussian blur with truncated, renormalized taps at the borders.
void blur_gaussian(std::vector<double>& f, int h, int w, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i / sigma) * (i / sigma));
  }
  std::vector<double> tmp(f.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0, norm = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        const int xx = x + d;
        if (xx < 0 || xx >= w) continue;
        const double k = kernel[static_cast<std::size_t>(d + radius)];
        acc += k * f[static_cast<std::size_t>(y) * w + xx];
        norm += k;
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc / norm;
    }
  }
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      double acc = 0.0, norm = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        const int yy = y + d;
        if (yy < 0 || yy >= h) continue;
        const double k = kernel[static_cast<std::size_t>(d + radius)];
        acc += k * tmp[static_cast<std::size_t>(yy) * w + x];
        norm += k;
      }
      f[static_cast<std::size_t>(y) * w + x] = acc / norm;
    }
  }
}

}  // namespace

Mask pattern_mask(int h, int w, double target_missing, std::uint64_t seed) {
  if (!(target_missing > 0.0 && target_missing <= 0.5)) {
    throw std::invalid_argument("pattern_mask: target_missing must be in (0, 0.5]");
  }
  Rng rng = Rng::substream(seed, "pattern-mask");
  std::vector<double> field(static_cast<std::size_t>(h) * w);
  for (double& v : field) v = rng.uniform();
  blur_gaussian(field, h, w, h / 8.0);

  const double total = static_cast<double>(h) * w;
  auto fraction_below = [&](double tau) {
    int n = 0;
    for (double v : field) n += (v < tau);
    return n / total;
  };

  double lo = *std::min_element(field.begin(), field.end());
  double hi = *std::max_element(field.begin(), field.end());
  double tau = 0.5 * (lo + hi);
  const double tolerance = 0.05;
  bool ok = false;
  for (int step = 0; step < 64; ++step) {
    tau = 0.5 * (lo + hi);
    const double frac = fraction_below(tau);
    if (std::fabs(frac - target_missing) <= tolerance) {
      ok = true;
      break;
    }
    (frac < target_missing ? lo : hi) = tau;
  }
  if (!ok) {
    throw std::runtime_error("pattern_mask: threshold search did not land within " +
                             std::to_string(tolerance) + " of " + std::to_string(target_missing) +
                             " after 64 bisection steps");
  }

  Mask m(h, w, 1);
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] < tau) m.known[i] = 0;
  }
  m.validate_for_inpainting();
  return m;
}

Mask pattern_mask(int h, int w, std::uint64_t seed) { return pattern_mask(h, w, 0.25, seed); }

Mask half_mask(int h, int w, std::uint64_t seed) {
  if (h < 2 || w < 2) throw std::invalid_argument("half_mask: dims must be >= 2");
  Rng rng = Rng::substream(seed, "half-mask");
  const int side = rng.uniform_int(0, 3);  // 0 left, 1 right, 2 top, 3 bottom
  Mask m(h, w, 1);
  const int hw = w / 2, hh = h / 2;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool missing = (side == 0 && x < hw) || (side == 1 && x >= w - hw) ||
                           (side == 2 && y < hh) || (side == 3 && y >= h - hh);
      if (missing) m.at(y, x) = 0;
    }
  }
  return m;
}

}  // namespace latentfill
