#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latentfill/gan.hpp"
#include "latentfill/image.hpp"
#include "latentfill/mask.hpp"

namespace latentfill::inpaint {

/// Per-pixel weights on known pixels: the fraction of missing pixels in the
/// surrounding window (center excluded, truncated at borders). Zero on
/// missing pixels. Shared across channels.
struct ImportanceWeights {
  int height = 0;
  int width = 0;
  int window_size = 0;
  std::vector<double> values;

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

ImportanceWeights importance_weights(const Mask& mask, int window_size);

/// Weights replicated over channels as a [1,C,H,W] tensor.
ad::Tensor expand_weights(const ImportanceWeights& w, int channels);

struct InpaintConfig {
  double lambda = 0.003;  // prior weight
  int iterations = 1500;
  int window_size = 7;
  double lr = 0.1;  // latent Adam step size
  double beta1 = 0.9;
  double beta2 = 0.999;
  int restarts = 3;
  std::uint64_t seed = 0;
  bool clip_latent = true;
  int threads = 1;

  void validate() const;
};

struct TrajectoryPoint {
  double context = 0.0;
  double prior = 0.0;
  double total = 0.0;
};

struct InpaintResult {
  ad::Tensor z_hat;  // [1, latent_dim]
  Image raw;         // generated image at z_hat, inference mode
  std::vector<TrajectoryPoint> trajectory;  // winning restart, one entry per iteration
  int chosen_restart = -1;
  double wall_time_ms = 0.0;
};

/// Graph builders for the inversion objective. g_img is the generated image
/// node; y_const / w_const hold the corrupted input and expanded weights.
int context_loss_node(ad::Graph& g, int g_img, int y_const, int w_const);
int prior_loss_node(ad::Graph& g, gan::Discriminator& D, int g_img, double lambda);

/// Weighted l1 distance sum(W . |g_img - y|), evaluated standalone.
double context_loss(const ad::Tensor& g_img, const ad::Tensor& y, const ImportanceWeights& w);

/// lambda * log(1 - D(g_img)) with the clamped sigmoid.
double prior_loss(gan::Discriminator& D, const ad::Tensor& g_img, double lambda);

/// Objective value at a latent point, by component.
struct LossParts {
  double context = 0.0, prior = 0.0, total = 0.0;
};
LossParts total_loss(const ad::Tensor& z, const Image& y, const Mask& mask, gan::Generator& G,
                     gan::Discriminator& D, const InpaintConfig& cfg);

/// Projected Adam descent over the latent space: per restart, z starts
/// uniform in [-1,1]^d and every step is followed by a clamp back to the
/// box. The restart with the lowest final total loss wins (ties to the
/// lowest index). Restarts draw from independent streams
/// (seed, "inpaint-restart-k"), so results do not depend on scheduling.
InpaintResult invert(const Image& y, const Mask& mask, gan::Generator& G, gan::Discriminator& D,
                     const InpaintConfig& cfg);

/// Finite-difference check of d(total_loss)/dz at a random latent.
double grad_check_total_loss(gan::Generator& G, gan::Discriminator& D, const Image& y,
                             const Mask& mask, const InpaintConfig& cfg, double eps = 1e-5);

/// JSON lines: {"iteration": k, "context": c, "prior": p, "total": t}
void write_trajectory(const std::string& path, const std::vector<TrajectoryPoint>& trajectory);

}  // namespace latentfill::inpaint
