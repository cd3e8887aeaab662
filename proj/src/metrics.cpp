#include "latentfill/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "latentfill/rng.hpp"

namespace latentfill::metrics {

namespace {

constexpr double kPsnrCap = 99.0;

void check_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_dims(b)) {
    throw std::invalid_argument(std::string(what) + ": image dims disagree");
  }
}

double to_unit(double v) { return (v + 1.0) * 0.5; }

double mse_to_psnr(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same(a, b, "psnr");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = to_unit(a.pixels[i]) - to_unit(b.pixels[i]);
    acc += d * d;
  }
  return mse_to_psnr(acc / static_cast<double>(a.pixels.size()));
}

double psnr_masked(const Image& a, const Image& b, const Mask& m) {
  check_same(a, b, "psnr_masked");
  if (m.height != a.height || m.width != a.width) {
    throw std::invalid_argument("psnr_masked: mask dims disagree");
  }
  double acc = 0.0;
  long count = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) {
        if (m.at(y, x) != 0) continue;
        const double d = to_unit(a.at(c, y, x)) - to_unit(b.at(c, y, x));
        acc += d * d;
        ++count;
      }
    }
  }
  if (count == 0) throw std::invalid_argument("psnr_masked: mask has no missing pixels");
  return mse_to_psnr(acc / static_cast<double>(count));
}

double ssim(const Image& a, const Image& b) {
  check_same(a, b, "ssim");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;  // (K1 L)^2, L = 1
  constexpr double kC2 = 0.03 * 0.03;
  if (a.height < kWin || a.width < kWin) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  }

  double kernel[kWin][kWin];
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    for (int j = 0; j < kWin; ++j) {
      const double dy = i - kWin / 2, dx = j - kWin / 2;
      kernel[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
      ksum += kernel[i][j];
    }
  }
  for (auto& row : kernel) {
    for (double& v : row) v /= ksum;
  }

  double total = 0.0;
  long positions = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = 0; y + kWin <= a.height; ++y) {
      for (int x = 0; x + kWin <= a.width; ++x) {
        double mu_a = 0, mu_b = 0;
        for (int i = 0; i < kWin; ++i) {
          for (int j = 0; j < kWin; ++j) {
            mu_a += kernel[i][j] * to_unit(a.at(c, y + i, x + j));
            mu_b += kernel[i][j] * to_unit(b.at(c, y + i, x + j));
          }
        }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < kWin; ++i) {
          for (int j = 0; j < kWin; ++j) {
            const double da = to_unit(a.at(c, y + i, x + j)) - mu_a;
            const double db = to_unit(b.at(c, y + i, x + j)) - mu_b;
            va += kernel[i][j] * da * da;
            vb += kernel[i][j] * db * db;
            cov += kernel[i][j] * da * db;
          }
        }
        total += ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                 ((mu_a * mu_a + mu_b * mu_b + kC1) * (va + vb + kC2));
        ++positions;
      }
    }
  }
  return total / static_cast<double>(positions);
}

Image nn_fill(const Image& y, const Mask& m, const std::vector<Image>& train_set) {
  if (train_set.empty()) throw std::invalid_argument("nn_fill: empty training set");
  if (m.height != y.height || m.width != y.width) {
    throw std::invalid_argument("nn_fill: mask dims disagree");
  }
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < train_set.size(); ++t) {
    check_same(y, train_set[t], "nn_fill");
    double dist = 0.0;
    for (int c = 0; c < y.channels; ++c) {
      for (int yy = 0; yy < y.height; ++yy) {
        for (int xx = 0; xx < y.width; ++xx) {
          if (m.at(yy, xx) != 1) continue;
          const double d = y.at(c, yy, xx) - train_set[t].at(c, yy, xx);
          dist += d * d;
        }
      }
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = t;
    }
  }
  return blend::overlay(y, m, train_set[best]);
}

Image mean_fill(const Image& y, const Mask& m) {
  if (m.height != y.height || m.width != y.width) {
    throw std::invalid_argument("mean_fill: mask dims disagree");
  }
  const int known = m.known_count();
  if (known == 0) throw std::invalid_argument("mean_fill: mask has no known pixels");
  Image out = y;
  for (int c = 0; c < y.channels; ++c) {
    double mean = 0.0;
    for (int yy = 0; yy < y.height; ++yy) {
      for (int xx = 0; xx < y.width; ++xx) {
        if (m.at(yy, xx) == 1) mean += y.at(c, yy, xx);
      }
    }
    mean /= known;
    for (int yy = 0; yy < y.height; ++yy) {
      for (int xx = 0; xx < y.width; ++xx) {
        if (m.at(yy, xx) == 0) out.at(c, yy, xx) = mean;
      }
    }
  }
  return out;
}

Image error_image(const Image& result, const Image& real, double gain) {
  check_same(result, real, "error_image");
  if (gain <= 0.0) throw std::invalid_argument("error_image: gain must be positive");
  Image out(result.channels, result.height, result.width);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = std::min(1.0, gain * std::fabs(result.pixels[i] - real.pixels[i]));
  }
  return out;
}

Method method_from_string(const std::string& s) {
  if (s == "ours_blend") return Method::ours_blend;
  if (s == "ours_overlay") return Method::ours_overlay;
  if (s == "mean_fill") return Method::mean_fill;
  if (s == "nn_fill") return Method::nn_fill;
  throw std::invalid_argument("unknown method '" + s +
                              "' (valid: ours_blend, ours_overlay, mean_fill, nn_fill)");
}

const char* method_name(Method m) {
  switch (m) {
    case Method::ours_blend: return "ours_blend";
    case Method::ours_overlay: return "ours_overlay";
    case Method::mean_fill: return "mean_fill";
    case Method::nn_fill: return "nn_fill";
  }
  return "?";
}

double EvalCell::mean_psnr() const {
  return psnr.empty() ? 0.0 : std::accumulate(psnr.begin(), psnr.end(), 0.0) / psnr.size();
}
double EvalCell::mean_ssim() const {
  return ssim.empty() ? 0.0 : std::accumulate(ssim.begin(), ssim.end(), 0.0) / ssim.size();
}
double EvalCell::mean_masked_psnr() const {
  return masked_psnr.empty()
             ? 0.0
             : std::accumulate(masked_psnr.begin(), masked_psnr.end(), 0.0) / masked_psnr.size();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["schema"] = schema;
  j["seed"] = seed;
  nlohmann::json jc = nlohmann::json::object();
  for (const auto& [key, cell] : cells) {
    nlohmann::json c;
    if (cell.failed) {
      c["failed"] = true;
      c["error"] = cell.error;
    } else {
      c["psnr"] = cell.psnr;
      c["ssim"] = cell.ssim;
      c["masked_psnr"] = cell.masked_psnr;
      c["aggregate"] = {{"psnr", cell.mean_psnr()},
                        {"ssim", cell.mean_ssim()},
                        {"masked_psnr", cell.mean_masked_psnr()}};
    }
    jc[key] = c;
  }
  j["cells"] = jc;
  return j;
}

void EvalReport::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write report");
  out << to_json().dump(2) << '\n';
}

Image corrupt(const Image& real, const Mask& m) {
  Image y = real;
  for (int c = 0; c < y.channels; ++c) {
    for (int yy = 0; yy < y.height; ++yy) {
      for (int xx = 0; xx < y.width; ++xx) {
        if (m.at(yy, xx) == 0) y.at(c, yy, xx) = 0.0;
      }
    }
  }
  return y;
}

Mask make_mask(const MaskFamilySpec& spec, int h, int w, std::uint64_t seed) {
  if (spec.family == "center") return center_mask(h, w, spec.center_fraction);
  if (spec.family == "pattern") return pattern_mask(h, w, spec.pattern_target, seed);
  if (spec.family == "random") return random_mask(h, w, spec.random_missing, seed);
  if (spec.family == "half") return half_mask(h, w, seed);
  throw std::invalid_argument("unknown mask family '" + spec.family +
                              "' (valid: center, pattern, random, half)");
}

EvalReport evaluate(const std::vector<Method>& methods, const std::vector<Image>& test_set,
                    const std::vector<MaskFamilySpec>& families, gan::Generator& G,
                    gan::Discriminator& D, const EvalOptions& options) {
  if (test_set.empty()) throw std::invalid_argument("evaluate: empty test set");
  if (methods.empty() || families.empty()) {
    throw std::invalid_argument("evaluate: need at least one method and one mask family");
  }

  const bool needs_inversion =
      std::any_of(methods.begin(), methods.end(),
                  [](Method m) { return m == Method::ours_blend || m == Method::ours_overlay; });

  EvalReport report;
  report.seed = options.seed;

  for (const auto& fam : families) {
    for (Method m : methods) {
      report.cells.emplace(std::string(method_name(m)) + "/" + fam.family, EvalCell{});
    }

    for (std::size_t i = 0; i < test_set.size(); ++i) {
      const Image& real = test_set[i];
      Mask mask;
      Image y;
      try {
        const std::uint64_t mask_seed =
            Rng::substream(options.seed, "mask-" + fam.family + "-" + std::to_string(i)).seed();
        mask = make_mask(fam, real.height, real.width, mask_seed);
        y = corrupt(real, mask);
      } catch (const std::exception& e) {
        for (Method m : methods) {
          auto& cell = report.cells[std::string(method_name(m)) + "/" + fam.family];
          cell.failed = true;
          cell.error = e.what();
        }
        continue;
      }

      inpaint::InpaintResult inv;
      bool inv_ok = false;
      std::string inv_error;
      if (needs_inversion) {
        try {
          inpaint::InpaintConfig cfg = options.inversion;
          cfg.seed = Rng::substream(options.seed, "inpaint-" + fam.family + "-" + std::to_string(i))
                         .seed();
          inv = inpaint::invert(y, mask, G, D, cfg);
          inv_ok = true;
        } catch (const std::exception& e) {
          inv_error = e.what();
        }
      }

      for (Method m : methods) {
        auto& cell = report.cells[std::string(method_name(m)) + "/" + fam.family];
        try {
          Image result;
          switch (m) {
            case Method::ours_blend:
            case Method::ours_overlay: {
              if (!inv_ok) throw std::runtime_error("inversion failed: " + inv_error);
              result = blend::finish(y, mask, inv.raw,
                                     m == Method::ours_blend ? blend::Mode::blend
                                                             : blend::Mode::overlay);
              break;
            }
            case Method::mean_fill:
              result = mean_fill(y, mask);
              break;
            case Method::nn_fill:
              result = nn_fill(y, mask, options.train_set);
              break;
          }
          cell.psnr.push_back(psnr(result, real));
          cell.ssim.push_back(ssim(result, real));
          cell.masked_psnr.push_back(psnr_masked(result, real, mask));
        } catch (const std::exception& e) {
          cell.failed = true;
          cell.error = e.what();
        }
      }
    }
  }
  return report;
}

}  // namespace latentfill::metrics
