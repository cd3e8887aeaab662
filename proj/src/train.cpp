#include "latentfill/train.hpp"

#include <chrono>
#include <numeric>
#include <stdexcept>

namespace latentfill::gan {

Trainer::Trainer(const GanConfig& c, Generator g, Discriminator d, Rng s)
    : cfg(c),
      G(std::move(g)),
      D(std::move(d)),
      opt_g(G.params(), {c.lr, c.beta1, c.beta2, 1e-8}),
      opt_d(D.params(), {c.lr, c.beta1, c.beta2, 1e-8}),
      stream(std::move(s)) {}

Trainer Trainer::create(const GanConfig& cfg) {
  cfg.validate();
  Rng init_g = Rng::substream(cfg.seed, "init-g");
  Rng init_d = Rng::substream(cfg.seed, "init-d");
  return Trainer(cfg, Generator(cfg, init_g), Discriminator(cfg, init_d),
                 Rng::substream(cfg.seed, "train"));
}

StepMetrics train_step(Trainer& t, const ad::Tensor& real_batch) {
  const int B = real_batch.shape.at(0);
  const ad::Tensor z = sample_latent(t.stream, B, t.cfg.latent_dim);
  StepMetrics m;

  // Discriminator update on real vs detached fake.
  try {
    ad::Tensor fake;
    {
      ad::Graph g;
      fake = g.val(t.G.forward(g, g.constant(z), /*training=*/true));
    }
    ad::Graph g;
    const int d_real = t.D.forward(g, g.constant(real_batch));
    const int d_fake = t.D.forward(g, g.constant(fake));
    const int ones = g.constant(ad::Tensor({B, 1}, 1.0));
    const int loss =
        g.scale(g.add(g.mean(g.log(d_real)), g.mean(g.log(g.sub(ones, d_fake)))), -1.0);
    m.d_loss = g.val(loss).item();

    int correct = 0;
    for (int i = 0; i < B; ++i) {
      correct += (g.val(d_real).data[static_cast<std::size_t>(i)] > 0.5);
      correct += (g.val(d_fake).data[static_cast<std::size_t>(i)] < 0.5);
    }
    m.d_accuracy = correct / (2.0 * B);

    for (ad::Tensor* p : t.D.params()) p->zero_grad();
    g.backward(loss);
    t.opt_d.step(t.D.params());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("discriminator update failed: ") + e.what());
  }

  // Generator update against the refreshed discriminator, same latents.
  try {
    t.D.set_requires_grad(false);
    ad::Graph g;
    const int img = t.G.forward(g, g.constant(z), /*training=*/true);
    const int d_fake = t.D.forward(g, img);
    const int loss = g.scale(g.mean(g.log(d_fake)), -1.0);
    m.g_loss = g.val(loss).item();

    for (ad::Tensor* p : t.G.params()) p->zero_grad();
    g.backward(loss);
    t.opt_g.step(t.G.params());
    t.D.set_requires_grad(true);
  } catch (const std::exception& e) {
    t.D.set_requires_grad(true);
    throw std::runtime_error(std::string("generator update failed: ") + e.what());
  }
  return m;
}

std::vector<EpochRecord> train(Trainer& t, const std::vector<Image>& dataset,
                               const EpochCallback& on_epoch) {
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");
  const int n = static_cast<int>(dataset.size());
  if (t.cfg.batch_size > n) {
    throw std::invalid_argument("train: batch_size " + std::to_string(t.cfg.batch_size) +
                                " exceeds dataset size " + std::to_string(n));
  }
  const int C = t.cfg.channels, S = t.cfg.image_size;
  for (const Image& im : dataset) {
    if (im.channels != C || im.height != S || im.width != S) {
      throw std::invalid_argument("train: dataset image dims do not match the model config");
    }
  }

  std::vector<EpochRecord> log;
  std::vector<int> order(static_cast<std::size_t>(n));
  const int B = t.cfg.batch_size;
  ad::Tensor batch({B, C, S, S});

  while (t.epoch < t.cfg.epochs) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    t.stream.shuffle(order);

    EpochRecord rec;
    int steps = 0;
    for (int pos = 0; pos + B <= n; pos += B) {
      for (int b = 0; b < B; ++b) {
        const Image& im = dataset[static_cast<std::size_t>(order[static_cast<std::size_t>(pos + b)])];
        const bool flip = t.cfg.flip_augmentation && t.stream.bernoulli(0.5);
        for (int c = 0; c < C; ++c) {
          for (int y = 0; y < S; ++y) {
            for (int x = 0; x < S; ++x) {
              batch.data[(((static_cast<std::size_t>(b) * C + c) * S) + y) * S + x] =
                  im.at(c, y, flip ? S - 1 - x : x);
            }
          }
        }
      }
      const StepMetrics sm = train_step(t, batch);
      rec.d_loss += sm.d_loss;
      rec.g_loss += sm.g_loss;
      rec.d_accuracy += sm.d_accuracy;
      ++steps;
    }
    t.epoch += 1;
    rec.epoch = t.epoch;
    if (steps > 0) {
      rec.d_loss /= steps;
      rec.g_loss /= steps;
      rec.d_accuracy /= steps;
    }
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(rec);
    if (on_epoch) on_epoch(rec, t);
  }
  return log;
}

}  // namespace latentfill::gan
