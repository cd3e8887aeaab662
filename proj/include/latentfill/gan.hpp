#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "latentfill/graph.hpp"
#include "latentfill/image.hpp"
#include "latentfill/rng.hpp"

namespace latentfill::gan {

struct GanConfig {
  int latent_dim = 64;
  int image_size = 32;  // 16, 32 or 64
  int channels = 1;
  int base_feature_maps = 16;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 1;
  bool flip_augmentation = true;

  /// Number of stride-2 up/down blocks; the 4x4 bottleneck fixes it.
  int depth() const;
  void validate() const;
};

using NamedTensors = std::vector<std::pair<std::string, ad::Tensor*>>;
using NamedBuffers = std::vector<std::pair<std::string, std::vector<double>*>>;

/// Projection to a 4x4 map followed by stride-2 transposed-conv blocks
/// (batchnorm + relu), final block plain + tanh. Output in [-1,1].
class Generator {
 public:
  Generator(const GanConfig& cfg, Rng& rng);

  /// z node [N, latent_dim] -> image node [N, C, S, S]. Training mode uses
  /// batch statistics and updates the running averages; inference mode is a
  /// pure function of z.
  int forward(ad::Graph& g, int z, bool training);

  std::vector<ad::Tensor*> params();
  NamedTensors named_params();
  NamedBuffers named_buffers();
  void set_requires_grad(bool v);
  const GanConfig& config() const { return cfg_; }

 private:
  struct Block {
    ad::Tensor w, b, gamma, beta;
    ad::BatchNormState bn;
    bool has_bn = true;
  };
  GanConfig cfg_;
  ad::Tensor proj_w_, proj_b_, bn0_gamma_, bn0_beta_;
  ad::BatchNormState bn0_;
  std::vector<Block> blocks_;
};

/// Stride-2 convolution blocks with leaky relu, then a sigmoid scalar head.
/// The sigmoid clamp keeps outputs strictly inside (0,1).
class Discriminator {
 public:
  Discriminator(const GanConfig& cfg, Rng& rng);

  /// image node [N, C, S, S] -> probability node [N, 1]
  int forward(ad::Graph& g, int x);

  std::vector<ad::Tensor*> params();
  NamedTensors named_params();
  void set_requires_grad(bool v);
  const GanConfig& config() const { return cfg_; }

 private:
  struct Block {
    ad::Tensor w, b;
  };
  GanConfig cfg_;
  std::vector<Block> blocks_;
  ad::Tensor head_w_, head_b_;
};

/// n x latent_dim, each coordinate i.i.d. uniform on [-1, 1].
ad::Tensor sample_latent(Rng& rng, int n, int latent_dim);

/// Convenience wrapper: run G on a latent batch in its own graph.
ad::Tensor generate(Generator& G, const ad::Tensor& z, bool training = false);

/// First image of generate() as an Image.
Image generate_image(Generator& G, const ad::Tensor& z);

}  // namespace latentfill::gan
