#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "latentfill/blend.hpp"
#include "latentfill/image.hpp"
#include "latentfill/inpaint.hpp"
#include "latentfill/mask.hpp"

namespace latentfill::metrics {

/// Peak signal-to-noise ratio in dB, computed in [0,1] space with peak 1 and
/// capped at 99 dB (exact matches report the cap).
double psnr(const Image& a, const Image& b);

/// Same, restricted to missing pixels (all channels).
double psnr_masked(const Image& a, const Image& b, const Mask& m);

/// Mean structural similarity over valid 11x11 Gaussian windows (sigma 1.5,
/// K1=0.01, K2=0.03, L=1), averaged across channels. Images mapped to [0,1].
double ssim(const Image& a, const Image& b);

/// Copies hole pixels from the training image with the smallest masked
/// (known-pixel) squared distance to y. Ties break to the lowest index.
Image nn_fill(const Image& y, const Mask& m, const std::vector<Image>& train_set);

/// Missing pixels replaced by the per-channel mean over known pixels.
Image mean_fill(const Image& y, const Mask& m);

/// clamp(gain * |result - real|, 0, 1); black where the images agree.
Image error_image(const Image& result, const Image& real, double gain);

enum class Method { ours_blend, ours_overlay, mean_fill, nn_fill };
Method method_from_string(const std::string& s);
const char* method_name(Method m);

struct MaskFamilySpec {
  std::string family;  // center | pattern | random | half
  double center_fraction = 0.5;
  double random_missing = 0.8;
  double pattern_target = 0.25;
};

/// Per-(method, mask family) evaluation cell. Aggregates are plain means of
/// the per-image values.
struct EvalCell {
  std::vector<double> psnr;
  std::vector<double> ssim;
  std::vector<double> masked_psnr;
  bool failed = false;
  std::string error;

  double mean_psnr() const;
  double mean_ssim() const;
  double mean_masked_psnr() const;
};

struct EvalReport {
  int schema = 1;
  std::uint64_t seed = 0;
  std::map<std::string, EvalCell> cells;  // key "method/family"

  nlohmann::json to_json() const;
  void save(const std::string& path) const;
};

struct EvalOptions {
  std::uint64_t seed = 0;
  inpaint::InpaintConfig inversion;  // hyperparameters for the ours_* methods
  std::vector<Image> train_set;      // nn_fill searches these
};

/// Fills the grid: every requested method on every mask family, with
/// deterministic per-image mask and inversion seeds derived from
/// options.seed. A failing cell is recorded in the report, not fatal.
EvalReport evaluate(const std::vector<Method>& methods, const std::vector<Image>& test_set,
                    const std::vector<MaskFamilySpec>& families, gan::Generator& G,
                    gan::Discriminator& D, const EvalOptions& options);

/// The corrupted observation used everywhere: hole pixels zeroed.
Image corrupt(const Image& real, const Mask& m);

/// Mask generator dispatch used by evaluate and the CLI.
Mask make_mask(const MaskFamilySpec& spec, int h, int w, std::uint64_t seed);

}  // namespace latentfill::metrics
