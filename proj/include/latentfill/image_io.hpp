#pragma once

#include <string>

#include "latentfill/image.hpp"
#include "latentfill/mask.hpp"

namespace latentfill {

/// 8-bit grayscale or RGB PNG -> image in [-1,1] via v/127.5 - 1.
/// Anything else (16-bit, palette, alpha) is rejected.
Image load_image(const std::string& path);

/// Inverse mapping with round-half-up and clamping. save(load(f)) then load
/// reproduces the float data exactly.
void save_image(const std::string& path, const Image& img);

/// Masks serialize as 8-bit grayscale PNG: 255 = known, 0 = missing.
void save_mask(const std::string& path, const Mask& m);
Mask load_mask(const std::string& path);

}  // namespace latentfill
