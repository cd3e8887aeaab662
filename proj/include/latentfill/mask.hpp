#pragma once

#include <cstdint>
#include <vector>

namespace latentfill {

/// Per-pixel corruption map: 1 = known/uncorrupted, 0 = missing.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> known;  // row-major

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 1);

  std::uint8_t at(int y, int x) const { return known[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int y, int x) { return known[static_cast<std::size_t>(y) * width + x]; }

  int missing_count() const;
  int known_count() const { return height * width - missing_count(); }

  /// Values are 0/1, with at least one known and one missing pixel.
  void validate_for_inpainting() const;
};

/// Axis-centered rectangular hole covering floor(h*f) x floor(w*f) pixels.
Mask center_mask(int h, int w, double hole_fraction);

/// Exactly floor(h*w*f) missing pixels placed by a seeded shuffle.
Mask random_mask(int h, int w, double missing_fraction, std::uint64_t seed);

/// Contiguous blobs from thresholded blurred noise; the measured missing
/// fraction lands within target_missing +/- 0.05.
Mask pattern_mask(int h, int w, double target_missing, std::uint64_t seed);
Mask pattern_mask(int h, int w, std::uint64_t seed);  // target 0.25

/// One image half missing; orientation (left/right/top/bottom) picked by seed.
Mask half_mask(int h, int w, std::uint64_t seed);

}  // namespace latentfill
