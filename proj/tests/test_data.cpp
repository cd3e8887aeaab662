#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "latentfill/dataset.hpp"
#include "latentfill/image_io.hpp"
#include "latentfill/rng.hpp"

using namespace latentfill;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  auto p = fs::temp_directory_path() / (std::string("latentfill_test_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("generate_dataset validates the spec") {
  DatasetSpec spec{Family::blobs, 0, 32, 1, 1};
  CHECK_THROWS_AS(generate_dataset(spec), std::invalid_argument);
  spec.count = 1;
  spec.channels = 2;
  CHECK_THROWS_AS(generate_dataset(spec), std::invalid_argument);
  CHECK_THROWS_AS(family_from_string("faces"), std::invalid_argument);
}

TEST_CASE("generation is deterministic and in range") {
  const DatasetSpec spec{Family::toy_faces, 16, 32, 1, 99};
  const auto a = generate_dataset(spec);
  const auto b = generate_dataset(spec);
  REQUIRE(a.size() == 16);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].pixels == b[i].pixels);
    a[i].validate();
  }
  // all three families render, including 3-channel
  for (Family f : {Family::toy_faces, Family::digits_grid, Family::blobs}) {
    const DatasetSpec s3{f, 4, 32, 3, 5};
    for (const auto& img : generate_dataset(s3)) img.validate();
  }
}

TEST_CASE("toy faces: left and right eye intensities correlate across the set") {
  const int n = 1000, size = 32;
  const auto images = generate_dataset({Family::toy_faces, n, size, 1, 7});
  // nominal eye windows at the default geometry
  auto region_mean = [&](const Image& img, double fx) {
    const int cx = static_cast<int>(size * fx), cy = static_cast<int>(size * 0.38);
    const int r = size / 8;
    double acc = 0.0;
    int cnt = 0;
    for (int y = cy - r; y <= cy + r; ++y) {
      for (int x = cx - r; x <= cx + r; ++x) {
        acc += img.at(0, y, x);
        ++cnt;
      }
    }
    return acc / cnt;
  };
  double sl = 0, sr = 0, sll = 0, srr = 0, slr = 0;
  for (const auto& img : images) {
    const double l = region_mean(img, 0.36), r = region_mean(img, 0.64);
    sl += l;
    sr += r;
    sll += l * l;
    srr += r * r;
    slr += l * r;
  }
  const double ml = sl / n, mr = sr / n;
  const double cov = slr / n - ml * mr;
  const double r = cov / std::sqrt((sll / n - ml * ml) * (srr / n - mr * mr));
  INFO("eye correlation r=", r);
  CHECK(r > 0.5);
}

TEST_CASE("generation throughput beats 1000 images/second at 32x32") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto images = generate_dataset({Family::toy_faces, 2000, 32, 1, 1});
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  INFO("generated 2000 images in ", dt, " s");
  CHECK(images.size() == 2000);
  CHECK(dt < 2.0);
}

TEST_CASE("png round trip: affine map endpoints and idempotence") {
  const auto dir = temp_dir("png");
  Image img(1, 2, 2);
  img.at(0, 0, 0) = -1.0;
  img.at(0, 0, 1) = 1.0;
  img.at(0, 1, 0) = 127 / 127.5 - 1.0;
  img.at(0, 1, 1) = 0.25;
  const auto p1 = (dir / "a.png").string();
  save_image(p1, img);
  const Image back = load_image(p1);
  CHECK(back.at(0, 0, 0) == -1.0);
  CHECK(back.at(0, 0, 1) == 1.0);
  CHECK(back.at(0, 1, 0) == doctest::Approx(-0.00392156862).epsilon(1e-9));

  // save(load(f)) then load again -> identical floats
  const auto p2 = (dir / "b.png").string();
  save_image(p2, back);
  const Image again = load_image(p2);
  CHECK(again.pixels == back.pixels);
}

TEST_CASE("png round trip error bounded by one quantization step") {
  const auto dir = temp_dir("pngq");
  Rng rng(4);
  Image img(3, 16, 16);
  for (double& v : img.pixels) v = rng.uniform(-1.0, 1.0);
  const auto p = (dir / "r.png").string();
  save_image(p, img);
  const Image back = load_image(p);
  double max_err = 0.0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    max_err = std::max(max_err, std::fabs(img.pixels[i] - back.pixels[i]));
  }
  CHECK(max_err <= 1.0 / 255.0);
}

TEST_CASE("load_image rejects garbage") {
  const auto dir = temp_dir("bad");
  const auto p = (dir / "not_png.png").string();
  std::FILE* f = std::fopen(p.c_str(), "wb");
  std::fputs("hello", f);
  std::fclose(f);
  CHECK_THROWS_AS(load_image(p), std::runtime_error);
  CHECK_THROWS_AS(load_image((dir / "missing.png").string()), std::runtime_error);
}

TEST_CASE("split is disjoint, exhaustive, deterministic") {
  const auto images = generate_dataset({Family::blobs, 100, 16, 1, 3});
  const auto [train, test] = split(images, 0.1, 11);
  CHECK(train.size() == 90);
  CHECK(test.size() == 10);

  // union equals the dataset (as multisets of pixel buffers)
  auto key = [](const Image& im) { return im.pixels; };
  std::vector<std::vector<double>> all;
  for (const auto& im : train) all.push_back(key(im));
  for (const auto& im : test) all.push_back(key(im));
  std::vector<std::vector<double>> orig;
  for (const auto& im : images) orig.push_back(key(im));
  std::sort(all.begin(), all.end());
  std::sort(orig.begin(), orig.end());
  CHECK(all == orig);

  const auto [train2, test2] = split(images, 0.1, 11);
  for (std::size_t i = 0; i < test.size(); ++i) CHECK(test[i].pixels == test2[i].pixels);
  const auto [train3, test3] = split(images, 0.1, 12);
  bool same = true;
  for (std::size_t i = 0; i < test.size() && same; ++i) same = test[i].pixels == test3[i].pixels;
  CHECK(!same);
}

TEST_CASE("dataset directory round trip with manifest hashes") {
  const auto dir = temp_dir("ds");
  const DatasetSpec spec{Family::digits_grid, 8, 16, 1, 21};
  const auto images = generate_dataset(spec);
  write_dataset(dir.string(), spec, images);
  const auto loaded = load_dataset(dir.string());
  CHECK(loaded.spec.count == 8);
  CHECK(loaded.spec.family == Family::digits_grid);
  REQUIRE(loaded.images.size() == 8);
  // PNG quantization applies, so compare after one round trip
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t k = 0; k < images[i].pixels.size(); ++k) {
      CHECK(std::fabs(images[i].pixels[k] - loaded.images[i].pixels[k]) <= 1.0 / 255.0);
    }
  }
}
