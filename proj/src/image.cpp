#include "latentfill/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace latentfill {

Image::Image(int c, int h, int w, double fill) : channels(c), height(h), width(w) {
  if (c <= 0 || h <= 0 || w <= 0) {
    throw std::invalid_argument("image dims must be positive: " + std::to_string(c) + "x" +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  pixels.assign(static_cast<std::size_t>(c) * h * w, fill);
}

void Image::validate() const {
  for (double v : pixels) {
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
      throw std::runtime_error("image pixel " + std::to_string(v) + " outside [-1,1]");
    }
  }
}

ad::Tensor to_tensor(const Image& img) {
  ad::Tensor t({1, img.channels, img.height, img.width});
  t.data = img.pixels;
  return t;
}

Image from_tensor(const ad::Tensor& t, bool clamp) {
  if (t.shape.size() != 4 || t.shape[0] < 1) {
    throw std::invalid_argument("from_tensor: expected [N,C,H,W], got " + ad::shape_str(t.shape));
  }
  Image img(t.shape[1], t.shape[2], t.shape[3]);
  std::copy(t.data.begin(), t.data.begin() + static_cast<long>(img.size()), img.pixels.begin());
  if (clamp) {
    for (double& v : img.pixels) v = clamp_unit(v);
  }
  img.validate();
  return img;
}

}  // namespace latentfill
