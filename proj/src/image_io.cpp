#include "latentfill/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace latentfill {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error(path + ": " + why);
}

std::uint8_t to_byte(double v) {
  double scaled = std::floor((v + 1.0) * 127.5 + 0.5);  // round half up
  if (scaled < 0.0) scaled = 0.0;
  if (scaled > 255.0) scaled = 255.0;
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace

Image load_image(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open for reading");

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    fail(path, "not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<std::uint8_t> raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "libpng error while reading");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported bit depth " + std::to_string(depth) + " (only 8-bit supported)");
  }
  int channels = 0;
  if (color == PNG_COLOR_TYPE_GRAY) {
    channels = 1;
  } else if (color == PNG_COLOR_TYPE_RGB) {
    channels = 3;
  } else {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported color type " + std::to_string(color) +
                   " (only 8-bit grayscale or RGB supported)");
  }

  raw.resize(static_cast<std::size_t>(h) * w * channels);
  row_ptrs.resize(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    row_ptrs[static_cast<std::size_t>(y)] = raw.data() + static_cast<std::size_t>(y) * w * channels;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(channels, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::uint8_t v = raw[(static_cast<std::size_t>(y) * w + x) * channels + c];
        img.at(c, y, x) = v / 127.5 - 1.0;
      }
    }
  }
  return img;
}

void save_image(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument(path + ": can only save 1- or 3-channel images, got " +
                                std::to_string(img.channels));
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng error while writing");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        row[static_cast<std::size_t>(x) * img.channels + c] = to_byte(img.at(c, y, x));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_mask(const std::string& path, const Mask& m) {
  Image img(1, m.height, m.width);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      img.at(0, y, x) = m.at(y, x) ? 1.0 : -1.0;  // 255 / 0 after quantization
    }
  }
  save_image(path, img);
}

Mask load_mask(const std::string& path) {
  const Image img = load_image(path);
  if (img.channels != 1) fail(path, "mask PNG must be grayscale");
  Mask m(img.height, img.width, 1);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const double v = img.at(0, y, x);
      if (v == 1.0) {
        m.at(y, x) = 1;
      } else if (v == -1.0) {
        m.at(y, x) = 0;
      } else {
        fail(path, "mask pixel is neither 0 nor 255");
      }
    }
  }
  return m;
}

}  // namespace latentfill
