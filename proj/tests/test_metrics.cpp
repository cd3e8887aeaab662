#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "latentfill/dataset.hpp"
#include "latentfill/metrics.hpp"
#include "latentfill/rng.hpp"

using namespace latentfill;
using namespace latentfill::metrics;

namespace {

Image random_image(Rng& rng, int c, int h, int w) {
  Image img(c, h, w);
  for (double& v : img.pixels) v = rng.uniform(-1.0, 1.0);
  return img;
}

}  // namespace

TEST_CASE("psnr: cap, closed form, loop oracle, symmetry") {
  Rng rng(1);
  const Image a = random_image(rng, 1, 8, 8);
  CHECK(psnr(a, a) == 99.0);

  // uniform difference of 0.1 in [0,1] space = 0.2 in [-1,1] space
  Image b = a;
  for (double& v : b.pixels) v = v > 0.79 ? v - 0.2 : v + 0.2;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

  const Image c = random_image(rng, 3, 8, 8);
  const Image d = random_image(rng, 3, 8, 8);
  double mse = 0.0;
  for (std::size_t i = 0; i < c.pixels.size(); ++i) {
    const double da = (c.pixels[i] + 1) / 2 - (d.pixels[i] + 1) / 2;
    mse += da * da;
  }
  mse /= static_cast<double>(c.pixels.size());
  CHECK(psnr(c, d) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-12));
  CHECK(psnr(c, d) == psnr(d, c));

  Image wrong(1, 4, 4);
  CHECK_THROWS_AS(psnr(a, wrong), std::invalid_argument);
}

TEST_CASE("masked psnr only sees hole pixels") {
  Rng rng(2);
  const Image real = random_image(rng, 1, 8, 8);
  const Mask m = center_mask(8, 8, 0.5);
  Image approx_real = real;
  // damage only known pixels: masked psnr stays at the cap
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (m.at(y, x) == 1) approx_real.at(0, y, x) = clamp_unit(approx_real.at(0, y, x) + 0.3);
  CHECK(psnr_masked(approx_real, real, m) == 99.0);
  CHECK(psnr(approx_real, real) < 99.0);
}

TEST_CASE("ssim: identity, anticorrelation, two-path recomputation") {
  Rng rng(3);
  const Image a = random_image(rng, 1, 16, 16);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  Image checker(1, 16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) checker.at(0, y, x) = ((x + y) % 2) ? 1.0 : -1.0;
  Image inverted = checker;
  for (double& v : inverted.pixels) v = -v;
  CHECK(ssim(checker, inverted) < 0.0);

  // independent windowed recomputation at one position of a fixed pair
  const Image p = random_image(rng, 1, 16, 16);
  const Image q = random_image(rng, 1, 16, 16);
  const double val = ssim(p, q);

  const double c1 = 1e-4, c2 = 9e-4;
  double kernel[11][11], ksum = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      const double dy = i - 5, dx = j - 5;
      kernel[i][j] = std::exp(-(dy * dy + dx * dx) / 4.5);
      ksum += kernel[i][j];
    }
  double total = 0.0;
  int count = 0;
  for (int oy = 0; oy + 11 <= 16; ++oy) {
    for (int ox = 0; ox + 11 <= 16; ++ox) {
      double ma = 0, mb = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          ma += kernel[i][j] / ksum * (p.at(0, oy + i, ox + j) + 1) / 2;
          mb += kernel[i][j] / ksum * (q.at(0, oy + i, ox + j) + 1) / 2;
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double da = (p.at(0, oy + i, ox + j) + 1) / 2 - ma;
          const double db = (q.at(0, oy + i, ox + j) + 1) / 2 - mb;
          va += kernel[i][j] / ksum * da * da;
          vb += kernel[i][j] / ksum * db * db;
          cov += kernel[i][j] / ksum * da * db;
        }
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  CHECK(val == doctest::Approx(total / count).epsilon(1e-10));

  Image tiny(1, 8, 8);
  CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("ssim bounds over random pairs") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const Image a = random_image(rng, 1, 12, 12);
    const Image b = random_image(rng, 1, 12, 12);
    const double v = ssim(a, b);
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("nn_fill: planted match wins and hole values are ignored") {
  Rng rng(5);
  std::vector<Image> train;
  for (int i = 0; i < 10; ++i) train.push_back(random_image(rng, 1, 8, 8));
  const Mask m = center_mask(8, 8, 0.5);

  // plant an exact match on known pixels at index 7
  Image y = random_image(rng, 1, 8, 8);
  for (int yy = 0; yy < 8; ++yy)
    for (int xx = 0; xx < 8; ++xx)
      if (m.at(yy, xx) == 1) y.at(0, yy, xx) = train[7].at(0, yy, xx);
  const Image filled = nn_fill(y, m, train);
  for (int yy = 0; yy < 8; ++yy)
    for (int xx = 0; xx < 8; ++xx)
      if (m.at(yy, xx) == 0) CHECK(filled.at(0, yy, xx) == train[7].at(0, yy, xx));

  // distance must not depend on pixels under the hole
  Image y2 = y;
  for (int yy = 0; yy < 8; ++yy)
    for (int xx = 0; xx < 8; ++xx)
      if (m.at(yy, xx) == 0) y2.at(0, yy, xx) = rng.uniform(-1.0, 1.0);
  const Image filled2 = nn_fill(y2, m, train);
  for (int yy = 0; yy < 8; ++yy)
    for (int xx = 0; xx < 8; ++xx)
      if (m.at(yy, xx) == 0) CHECK(filled2.at(0, yy, xx) == filled.at(0, yy, xx));

  // single training image gets copied regardless of distance
  const std::vector<Image> one{train[3]};
  const Image forced = nn_fill(y, m, one);
  for (int yy = 0; yy < 8; ++yy)
    for (int xx = 0; xx < 8; ++xx)
      if (m.at(yy, xx) == 0) CHECK(forced.at(0, yy, xx) == train[3].at(0, yy, xx));

  CHECK_THROWS_AS(nn_fill(y, m, {}), std::invalid_argument);
}

TEST_CASE("mean_fill: constants, two-value mean, loop oracle") {
  Image constant(1, 6, 6, 0.25);
  const Mask m = center_mask(6, 6, 0.5);
  const Image fill = mean_fill(constant, m);
  for (double v : fill.pixels) CHECK(v == 0.25);

  // known pixels half 0, half 1 -> hole filled with 0.5
  Image two(1, 4, 4, 0.0);
  Mask m2(4, 4, 1);
  m2.at(1, 1) = m2.at(1, 2) = m2.at(2, 1) = m2.at(2, 2) = 0;
  int flip = 0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      if (m2.at(y, x) == 1) two.at(0, y, x) = (flip++ % 2) ? 1.0 : 0.0;
  const Image filled = mean_fill(two, m2);
  CHECK(filled.at(0, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng(6);
  const Image r = random_image(rng, 3, 8, 8);
  const Mask m3 = random_mask(8, 8, 0.4, 9);
  const Image mf = mean_fill(r, m3);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    int count = 0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        if (m3.at(y, x) == 1) {
          mean += r.at(c, y, x);
          ++count;
        }
    mean /= count;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        if (m3.at(y, x) == 0) {
          CHECK(mf.at(c, y, x) == doctest::Approx(mean).epsilon(1e-12));
        } else {
          CHECK(mf.at(c, y, x) == r.at(c, y, x));
        }
      }
  }
}

TEST_CASE("error image: black on match, gain, clamp") {
  Rng rng(7);
  const Image a = random_image(rng, 1, 8, 8);
  const Image same = error_image(a, a, 2.0);
  for (double v : same.pixels) CHECK(v == 0.0);

  Image b = a;
  b.pixels[5] = clamp_unit(a.pixels[5] + 0.3);
  const Image e = error_image(b, a, 2.0);
  CHECK(e.pixels[5] == doctest::Approx(2.0 * std::fabs(b.pixels[5] - a.pixels[5])).epsilon(1e-12));

  Image far = a;
  for (double& v : far.pixels) v = clamp_unit(v + 1.2);
  const Image clamped = error_image(far, a, 2.0);
  for (double v : clamped.pixels) CHECK(v <= 1.0);
  CHECK_THROWS_AS(error_image(a, a, 0.0), std::invalid_argument);
}

TEST_CASE("evaluate covers the grid with baseline methods") {
  const auto images = generate_dataset({Family::toy_faces, 6, 32, 1, 51});
  const auto train = generate_dataset({Family::toy_faces, 20, 32, 1, 52});
  gan::GanConfig gc;
  gc.latent_dim = 8;
  gc.image_size = 32;
  gc.base_feature_maps = 8;
  gc.seed = 1;
  Rng ig(1), id(2);
  gan::Generator G(gc, ig);
  gan::Discriminator D(gc, id);

  EvalOptions opts;
  opts.seed = 9;
  opts.train_set = train;
  const std::vector<Method> methods{Method::mean_fill, Method::nn_fill};
  const std::vector<MaskFamilySpec> families{{"center"}, {"random"}};
  const EvalReport rep = evaluate(methods, images, families, G, D, opts);

  REQUIRE(rep.cells.size() == 4);
  for (const auto& [key, cell] : rep.cells) {
    INFO(key);
    CHECK(!cell.failed);
    CHECK(cell.psnr.size() == 6);
    // aggregate equals the mean of the per-image rows
    double mean = 0.0;
    for (double v : cell.psnr) mean += v;
    mean /= cell.psnr.size();
    CHECK(cell.mean_psnr() == doctest::Approx(mean).epsilon(1e-12));
  }

  // determinism
  const EvalReport rep2 = evaluate(methods, images, families, G, D, opts);
  CHECK(rep.to_json() == rep2.to_json());

  CHECK_THROWS_AS(evaluate(methods, {}, families, G, D, opts), std::invalid_argument);
}

TEST_CASE("evaluate records per-cell failures without aborting") {
  const auto images = generate_dataset({Family::toy_faces, 2, 32, 1, 53});
  gan::GanConfig gc;
  gc.latent_dim = 8;
  gc.image_size = 32;
  gc.base_feature_maps = 8;
  Rng ig(1), id(2);
  gan::Generator G(gc, ig);
  gan::Discriminator D(gc, id);
  EvalOptions opts;  // no train_set: nn_fill must fail, mean_fill succeeds
  const EvalReport rep =
      evaluate({Method::nn_fill, Method::mean_fill}, images, {{"center"}}, G, D, opts);
  CHECK(rep.cells.at("nn_fill/center").failed);
  CHECK(!rep.cells.at("mean_fill/center").failed);
}
