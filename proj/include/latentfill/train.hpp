#pragma once

#include <functional>
#include <vector>

#include "latentfill/adam.hpp"
#include "latentfill/gan.hpp"

namespace latentfill::gan {

/// Everything the adversarial training loop owns: both networks, their
/// optimizers, the training randomness, and the epoch counter. Checkpoints
/// capture this struct exactly, so a resumed run continues the same sequence.
struct Trainer {
  GanConfig cfg;
  Generator G;
  Discriminator D;
  ad::AdamOptimizer opt_g;
  ad::AdamOptimizer opt_d;
  Rng stream;  // shuffles, flips and latent draws, in a fixed order
  int epoch = 0;

  static Trainer create(const GanConfig& cfg);

 private:
  Trainer(const GanConfig& c, Generator g, Discriminator d, Rng s);
};

struct StepMetrics {
  double d_loss = 0.0;      // sum of both discriminator loss terms
  double g_loss = 0.0;      // non-saturating generator loss
  double d_accuracy = 0.0;  // threshold-0.5 accuracy over real + fake
};

/// One discriminator update followed by one generator update on the same
/// latent batch. The generator maximizes log D(G(z)); the discriminator
/// maximizes log D(h) + log(1 - D(G(z))).
StepMetrics train_step(Trainer& t, const ad::Tensor& real_batch);

struct EpochRecord {
  int epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_accuracy = 0.0;
  double wall_time_ms = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&, Trainer&)>;

/// Shuffled mini-batch epochs until cfg.epochs, with optional horizontal
/// flip augmentation (probability 0.5 per image). Resuming a checkpointed
/// trainer continues from its epoch counter with the same random sequence.
/// The trailing partial batch of each epoch is dropped.
std::vector<EpochRecord> train(Trainer& t, const std::vector<Image>& dataset,
                               const EpochCallback& on_epoch = {});

}  // namespace latentfill::gan
