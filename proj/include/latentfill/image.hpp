#pragma once

#include <vector>

#include "latentfill/tensor.hpp"

namespace latentfill {

/// Channel-planar float image, every value in [-1, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // [c][y][x]

  Image() = default;
  Image(int c, int h, int w, double fill = 0.0);

  double& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  std::size_t size() const { return pixels.size(); }

  /// Throws if any pixel falls outside [-1, 1] or is not finite.
  void validate() const;

  bool same_dims(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

/// Image as a [1,C,H,W] tensor for network input.
ad::Tensor to_tensor(const Image& img);
/// First batch entry of a [N,C,H,W] tensor back to an image (values clamped
/// to [-1,1] only if clamp is set; otherwise out-of-range throws).
Image from_tensor(const ad::Tensor& t, bool clamp = false);

inline double clamp_unit(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace latentfill
