#include "latentfill/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "latentfill/image_io.hpp"
#include "latentfill/manifest.hpp"
#include "latentfill/rng.hpp"

namespace fs = std::filesystem;

namespace latentfill {

Family family_from_string(const std::string& s) {
  if (s == "toy_faces") return Family::toy_faces;
  if (s == "digits_grid") return Family::digits_grid;
  if (s == "blobs") return Family::blobs;
  throw std::invalid_argument("unknown dataset family '" + s +
                              "' (valid: toy_faces, digits_grid, blobs)");
}

const char* family_name(Family f) {
  switch (f) {
    case Family::toy_faces: return "toy_faces";
    case Family::digits_grid: return "digits_grid";
    case Family::blobs: return "blobs";
  }
  return "?";
}

namespace {

// Painter helpers on a single-channel canvas, values in [-1,1], soft edges.

struct Canvas {
  int h, w;
  std::vector<double> v;
  Canvas(int h_, int w_, double fill) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, fill) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
};

double smooth01(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

// alpha = 1 inside the ellipse, feathering to 0 over ~1.2px at the rim
void paint_ellipse(Canvas& c, double cx, double cy, double rx, double ry, double value) {
  const double feather = 1.2;
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry - 2)));
  const int y1 = std::min(c.h - 1, static_cast<int>(std::ceil(cy + ry + 2)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx - 2)));
  const int x1 = std::min(c.w - 1, static_cast<int>(std::ceil(cx + rx + 2)));
  const double rmin = std::min(rx, ry);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const double t = std::sqrt(dx * dx + dy * dy);  // 1 at the rim
      const double alpha = smooth01((1.0 - t) * rmin / feather + 0.5);
      if (alpha > 0.0) c.at(y, x) += alpha * (value - c.at(y, x));
    }
  }
}

// ring of the ellipse rim, thickness in pixels
void paint_ellipse_outline(Canvas& c, double cx, double cy, double rx, double ry, double thickness,
                           double value) {
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry - 3)));
  const int y1 = std::min(c.h - 1, static_cast<int>(std::ceil(cy + ry + 3)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx - 3)));
  const int x1 = std::min(c.w - 1, static_cast<int>(std::ceil(cx + rx + 3)));
  const double rmin = std::min(rx, ry);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const double dist_px = std::fabs(std::sqrt(dx * dx + dy * dy) - 1.0) * rmin;
      const double alpha = smooth01(1.5 - dist_px / (0.5 * thickness));
      if (alpha > 0.0) c.at(y, x) += alpha * (value - c.at(y, x));
    }
  }
}

void paint_rect(Canvas& c, double cx, double cy, double hx, double hy, double value) {
  const double feather = 0.9;
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - hy - 2)));
  const int y1 = std::min(c.h - 1, static_cast<int>(std::ceil(cy + hy + 2)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - hx - 2)));
  const int x1 = std::min(c.w - 1, static_cast<int>(std::ceil(cx + hx + 2)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = std::fabs(x + 0.5 - cx) - hx;
      const double dy = std::fabs(y + 0.5 - cy) - hy;
      const double d = std::max(dx, dy);  // signed box distance, <0 inside
      const double alpha = smooth01(0.5 - d / feather);
      if (alpha > 0.0) c.at(y, x) += alpha * (value - c.at(y, x));
    }
  }
}

Canvas render_toy_face(int size, Rng& rng) {
  const double s = size;
  Canvas c(size, size, -0.9 + rng.uniform(0.0, 0.15));
  const double cx = s * (0.5 + rng.uniform(-0.04, 0.04));
  const double cy = s * (0.5 + rng.uniform(-0.04, 0.04));
  const double rx = s * (0.32 + rng.uniform(-0.03, 0.03));
  const double ry = s * (0.40 + rng.uniform(-0.03, 0.03));
  const double face = 0.50 + rng.uniform(-0.15, 0.25);
  paint_ellipse(c, cx, cy, rx, ry, face);
  paint_ellipse_outline(c, cx, cy, rx, ry, 1.6, face - 0.75);

  // The two eye intensities share a base value; that common factor is the
  // symmetry a model can exploit to predict one eye from the other.
  const double eye_base = -0.55 + rng.uniform(-0.25, 0.25);
  const double eye_dx = s * (0.14 + rng.uniform(-0.015, 0.015));
  const double eye_y = cy - s * (0.12 + rng.uniform(-0.012, 0.012));
  const double eye_r = s * (0.055 + rng.uniform(-0.008, 0.014));
  paint_ellipse(c, cx - eye_dx, eye_y, eye_r, eye_r, eye_base + rng.uniform(-0.07, 0.07));
  paint_ellipse(c, cx + eye_dx, eye_y, eye_r, eye_r, eye_base + rng.uniform(-0.07, 0.07));

  const double mouth_y = cy + s * (0.20 + rng.uniform(-0.02, 0.02));
  const double mouth_hx = s * (0.15 + rng.uniform(-0.03, 0.03));
  const double mouth_hy = s * (0.035 + rng.uniform(-0.01, 0.012));
  paint_rect(c, cx, mouth_y, mouth_hx, mouth_hy, -0.45 + rng.uniform(-0.2, 0.1));
  return c;
}

Canvas render_digit(int size, Rng& rng) {
  const double s = size;
  Canvas c(size, size, -0.92 + rng.uniform(0.0, 0.12));
  const int digit = rng.uniform_int(0, 9);
  // segment presence: A B C D E F G
  static const bool seg[10][7] = {
      {1, 1, 1, 1, 1, 1, 0},  // 0
      {0, 1, 1, 0, 0, 0, 0},  // 1
      {1, 1, 0, 1, 1, 0, 1},  // 2
      {1, 1, 1, 1, 0, 0, 1},  // 3
      {0, 1, 1, 0, 0, 1, 1},  // 4
      {1, 0, 1, 1, 0, 1, 1},  // 5
      {1, 0, 1, 1, 1, 1, 1},  // 6
      {1, 1, 1, 0, 0, 0, 0},  // 7
      {1, 1, 1, 1, 1, 1, 1},  // 8
      {1, 1, 1, 1, 0, 1, 1},  // 9
  };
  const double gh = s * 0.52, gw = s * 0.30;  // glyph box
  const double gx = s * (0.5 + rng.uniform(-0.12, 0.12)) - gw / 2;
  const double gy = s * (0.5 + rng.uniform(-0.10, 0.10)) - gh / 2;
  const double ink = 0.55 + rng.uniform(-0.15, 0.3);
  const double t = std::max(1.2, s * 0.045);  // stroke half-thickness
  auto hseg = [&](double fy) { paint_rect(c, gx + gw / 2, gy + fy * gh, gw / 2 - t / 2, t, ink); };
  auto vseg = [&](double fx, double fy0, double fy1) {
    paint_rect(c, gx + fx * gw, gy + 0.5 * (fy0 + fy1) * gh, t, (fy1 - fy0) * gh / 2 - t / 2, ink);
  };
  if (seg[digit][0]) hseg(0.0);
  if (seg[digit][1]) vseg(1.0, 0.0, 0.5);
  if (seg[digit][2]) vseg(1.0, 0.5, 1.0);
  if (seg[digit][3]) hseg(1.0);
  if (seg[digit][4]) vseg(0.0, 0.5, 1.0);
  if (seg[digit][5]) vseg(0.0, 0.0, 0.5);
  if (seg[digit][6]) hseg(0.5);
  return c;
}

Canvas render_blobs(int size, Rng& rng) {
  const double s = size;
  Canvas c(size, size, -0.9 + rng.uniform(0.0, 0.1));
  const int n = rng.uniform_int(1, 3);
  for (int i = 0; i < n; ++i) {
    const double cx = s * rng.uniform(0.2, 0.8);
    const double cy = s * rng.uniform(0.2, 0.8);
    const double rx = s * rng.uniform(0.10, 0.28);
    const double ry = s * rng.uniform(0.10, 0.28);
    paint_ellipse(c, cx, cy, rx, ry, rng.uniform(-0.1, 0.9));
  }
  return c;
}

Image canvas_to_image(const Canvas& c, int channels, Rng& rng) {
  Image img(channels, c.h, c.w);
  if (channels == 1) {
    img.pixels = c.v;
  } else {
    // shared tint per image so channels stay strongly correlated
    const double tint[3] = {1.0, 0.88 + rng.uniform(-0.06, 0.06), 0.78 + rng.uniform(-0.06, 0.06)};
    for (int ch = 0; ch < 3; ++ch) {
      for (std::size_t i = 0; i < c.v.size(); ++i) {
        // scale the offset from black (-1) so tinting darkens, never shifts hue of the background
        img.pixels[static_cast<std::size_t>(ch) * c.v.size() + i] = -1.0 + (c.v[i] + 1.0) * tint[ch];
      }
    }
  }
  for (double& v : img.pixels) v = clamp_unit(v);
  return img;
}

}  // namespace

std::vector<Image> generate_dataset(const DatasetSpec& spec) {
  if (spec.count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
  if (spec.channels != 1 && spec.channels != 3) {
    throw std::invalid_argument("generate_dataset: channels must be 1 or 3");
  }
  if (spec.image_size < 8) throw std::invalid_argument("generate_dataset: image_size too small");
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    Rng rng = Rng::substream(spec.seed, "image-" + std::to_string(i));
    Canvas c = [&] {
      switch (spec.family) {
        case Family::toy_faces: return render_toy_face(spec.image_size, rng);
        case Family::digits_grid: return render_digit(spec.image_size, rng);
        case Family::blobs: return render_blobs(spec.image_size, rng);
      }
      throw std::invalid_argument("generate_dataset: unknown family");
    }();
    out.push_back(canvas_to_image(c, spec.channels, rng));
  }
  return out;
}

std::pair<std::vector<Image>, std::vector<Image>> split(const std::vector<Image>& dataset,
                                                        double test_fraction,
                                                        std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split: test_fraction must be in (0,1)");
  }
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::substream(seed, "split");
  rng.shuffle(idx);
  const std::size_t n_test = static_cast<std::size_t>(std::floor(dataset.size() * test_fraction));
  std::pair<std::vector<Image>, std::vector<Image>> out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < n_test ? out.second : out.first).push_back(dataset[idx[i]]);
  }
  return out;
}

std::string write_dataset(const std::string& dir, const DatasetSpec& spec,
                          const std::vector<Image>& images) {
  fs::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  char name[32];
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::snprintf(name, sizeof(name), "img_%05zu.png", i);
    const std::string path = (fs::path(dir) / name).string();
    save_image(path, images[i]);
    files.push_back({{"name", name}, {"fnv64", hex64(file_fnv64(path))}});
  }
  nlohmann::json j;
  j["schema"] = 1;
  j["spec"] = {{"family", family_name(spec.family)},
               {"count", spec.count},
               {"image_size", spec.image_size},
               {"channels", spec.channels},
               {"seed", spec.seed}};
  j["files"] = files;
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(manifest_path);
  if (!out) throw std::runtime_error(manifest_path + ": cannot write");
  out << j.dump(2) << '\n';
  return manifest_path;
}

LoadedDataset load_dataset(const std::string& dir) {
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error(manifest_path + ": cannot open dataset manifest");
  nlohmann::json j;
  in >> j;
  LoadedDataset ds;
  const auto& s = j.at("spec");
  ds.spec.family = family_from_string(s.at("family").get<std::string>());
  ds.spec.count = s.at("count").get<int>();
  ds.spec.image_size = s.at("image_size").get<int>();
  ds.spec.channels = s.at("channels").get<int>();
  ds.spec.seed = s.at("seed").get<std::uint64_t>();
  for (const auto& f : j.at("files")) {
    ds.images.push_back(load_image((fs::path(dir) / f.at("name").get<std::string>()).string()));
  }
  return ds;
}

}  // namespace latentfill
