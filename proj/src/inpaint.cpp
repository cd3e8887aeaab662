#include "latentfill/inpaint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "latentfill/adam.hpp"
#include "latentfill/gradcheck.hpp"

namespace latentfill::inpaint {

ImportanceWeights importance_weights(const Mask& mask, int window_size) {
  if (window_size < 1 || window_size % 2 == 0) {
    throw std::invalid_argument("importance_weights: window_size must be odd, got " +
                                std::to_string(window_size));
  }
  const int h = mask.height, w = mask.width, r = window_size / 2;

  // Integral image of missing counts; integer arithmetic keeps every
  // window sum exact, so the only rounding is the final division.
  std::vector<long> integral(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  auto I = [&](int y, int x) -> long& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      I(y + 1, x + 1) = I(y, x + 1) + I(y + 1, x) - I(y, x) + (mask.at(y, x) == 0 ? 1 : 0);
    }
  }

  ImportanceWeights out;
  out.height = h;
  out.width = w;
  out.window_size = window_size;
  out.values.assign(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(y, x) == 0) continue;  // missing pixels carry zero weight
      const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
      const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
      const long missing = I(y1 + 1, x1 + 1) - I(y0, x1 + 1) - I(y1 + 1, x0) + I(y0, x0);
      const long neighbors = static_cast<long>(y1 - y0 + 1) * (x1 - x0 + 1) - 1;  // center excluded
      if (neighbors > 0) {
        out.values[static_cast<std::size_t>(y) * w + x] =
            static_cast<double>(missing) / static_cast<double>(neighbors);
      }
    }
  }
  return out;
}

ad::Tensor expand_weights(const ImportanceWeights& w, int channels) {
  ad::Tensor t({1, channels, w.height, w.width});
  const std::size_t plane = w.values.size();
  for (int c = 0; c < channels; ++c) {
    std::copy(w.values.begin(), w.values.end(), t.data.begin() + static_cast<long>(c * plane));
  }
  return t;
}

void InpaintConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("inpaint: lambda must be >= 0");
  if (iterations < 1) throw std::invalid_argument("inpaint: iterations must be >= 1");
  if (window_size < 1 || window_size % 2 == 0) {
    throw std::invalid_argument("inpaint: window_size must be odd");
  }
  if (restarts < 1) throw std::invalid_argument("inpaint: restarts must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("inpaint: lr must be positive");
  if (threads < 1) throw std::invalid_argument("inpaint: threads must be >= 1");
}

int context_loss_node(ad::Graph& g, int g_img, int y_const, int w_const) {
  return g.sum(g.mul(w_const, g.abs(g.sub(g_img, y_const))));
}

int prior_loss_node(ad::Graph& g, gan::Discriminator& D, int g_img, double lambda) {
  const int d = D.forward(g, g_img);
  const int one = g.constant(ad::Tensor(g.val(d).shape, 1.0));
  return g.scale(g.sum(g.log(g.sub(one, d))), lambda);
}

double context_loss(const ad::Tensor& g_img, const ad::Tensor& y, const ImportanceWeights& w) {
  if (g_img.shape != y.shape) {
    throw std::invalid_argument("context_loss: shape mismatch " + ad::shape_str(g_img.shape) +
                                " vs " + ad::shape_str(y.shape));
  }
  ad::Graph g;
  const int img = g.constant(g_img);
  const int yc = g.constant(y);
  const int wc = g.constant(expand_weights(w, g_img.shape.at(1)));
  return g.val(context_loss_node(g, img, yc, wc)).item();
}

double prior_loss(gan::Discriminator& D, const ad::Tensor& g_img, double lambda) {
  ad::Graph g;
  return g.val(prior_loss_node(g, D, g.constant(g_img), lambda)).item();
}

namespace {

struct RequiresGradGuard {
  gan::Generator& G;
  gan::Discriminator& D;
  RequiresGradGuard(gan::Generator& g, gan::Discriminator& d) : G(g), D(d) {
    G.set_requires_grad(false);
    D.set_requires_grad(false);
  }
  ~RequiresGradGuard() {
    G.set_requires_grad(true);
    D.set_requires_grad(true);
  }
};

struct RestartOutcome {
  bool ok = false;
  std::string error;
  ad::Tensor z;
  std::vector<TrajectoryPoint> trajectory;
};

}  // namespace

LossParts total_loss(const ad::Tensor& z, const Image& y, const Mask& mask, gan::Generator& G,
                     gan::Discriminator& D, const InpaintConfig& cfg) {
  cfg.validate();
  const auto w = importance_weights(mask, cfg.window_size);
  ad::Graph g;
  const int img = G.forward(g, g.constant(z), /*training=*/false);
  const int ctx = context_loss_node(g, img, g.constant(to_tensor(y)),
                                    g.constant(expand_weights(w, y.channels)));
  const int pri = prior_loss_node(g, D, img, cfg.lambda);
  const int tot = g.add(ctx, pri);
  return {g.val(ctx).item(), g.val(pri).item(), g.val(tot).item()};
}

InpaintResult invert(const Image& y, const Mask& mask, gan::Generator& G, gan::Discriminator& D,
                     const InpaintConfig& cfg) {
  cfg.validate();
  mask.validate_for_inpainting();
  const gan::GanConfig& gc = G.config();
  if (y.channels != gc.channels || y.height != gc.image_size || y.width != gc.image_size) {
    throw std::invalid_argument("invert: input is " + std::to_string(y.channels) + "x" +
                                std::to_string(y.height) + "x" + std::to_string(y.width) +
                                ", model expects " + std::to_string(gc.channels) + "x" +
                                std::to_string(gc.image_size) + "x" + std::to_string(gc.image_size));
  }
  if (mask.height != y.height || mask.width != y.width) {
    throw std::invalid_argument("invert: mask dims do not match the image");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const ad::Tensor y_t = to_tensor(y);
  const ad::Tensor w_t = expand_weights(importance_weights(mask, cfg.window_size), y.channels);

  RequiresGradGuard guard(G, D);
  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(cfg.restarts));

  auto run_restart = [&](int r) {
    RestartOutcome& out = outcomes[static_cast<std::size_t>(r)];
    try {
      Rng rng = Rng::substream(cfg.seed, "inpaint-restart-" + std::to_string(r));
      ad::Tensor z = gan::sample_latent(rng, 1, gc.latent_dim);
      z.requires_grad = true;
      ad::AdamState state(z.size());
      const ad::AdamParams hp{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
      out.trajectory.reserve(static_cast<std::size_t>(cfg.iterations));
      for (int k = 0; k < cfg.iterations; ++k) {
        ad::Graph g;
        const int img = G.forward(g, g.leaf(z), /*training=*/false);
        const int ctx = context_loss_node(g, img, g.constant(y_t), g.constant(w_t));
        const int pri = prior_loss_node(g, D, img, cfg.lambda);
        const int tot = g.add(ctx, pri);
        out.trajectory.push_back({g.val(ctx).item(), g.val(pri).item(), g.val(tot).item()});
        z.zero_grad();
        g.backward(tot);
        adam_step(z, z.grad, state, hp);
        if (cfg.clip_latent) {
          for (double& v : z.data) v = clamp_unit(v);
        }
      }
      out.z = std::move(z);
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  };

  if (cfg.threads > 1 && cfg.restarts > 1) {
    // static partition: restart r runs on thread r % width
    const int width = std::min(cfg.threads, cfg.restarts);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(width));
    for (int t = 0; t < width; ++t) {
      pool.emplace_back([&, t] {
        for (int r = t; r < cfg.restarts; r += width) run_restart(r);
      });
    }
    for (auto& th : pool) th.join();
  } else {
    for (int r = 0; r < cfg.restarts; ++r) run_restart(r);
  }

  int best = -1;
  for (int r = 0; r < cfg.restarts; ++r) {
    if (!outcomes[static_cast<std::size_t>(r)].ok) continue;
    if (best < 0 || outcomes[static_cast<std::size_t>(r)].trajectory.back().total <
                        outcomes[static_cast<std::size_t>(best)].trajectory.back().total) {
      best = r;
    }
  }
  if (best < 0) {
    std::string msg = "invert: every restart failed:";
    for (int r = 0; r < cfg.restarts; ++r) {
      msg += "\n  restart " + std::to_string(r) + ": " + outcomes[static_cast<std::size_t>(r)].error;
    }
    throw std::runtime_error(msg);
  }

  InpaintResult res;
  res.z_hat = std::move(outcomes[static_cast<std::size_t>(best)].z);
  res.z_hat.requires_grad = false;
  res.z_hat.grad.clear();
  res.trajectory = std::move(outcomes[static_cast<std::size_t>(best)].trajectory);
  res.chosen_restart = best;
  res.raw = from_tensor(gan::generate(G, res.z_hat, false));
  res.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

double grad_check_total_loss(gan::Generator& G, gan::Discriminator& D, const Image& y,
                             const Mask& mask, const InpaintConfig& cfg, double eps) {
  const ad::Tensor y_t = to_tensor(y);
  const ad::Tensor w_t = expand_weights(importance_weights(mask, cfg.window_size), y.channels);
  RequiresGradGuard guard(G, D);
  Rng rng = Rng::substream(cfg.seed, "gradcheck-total-loss");
  const ad::Tensor z = gan::sample_latent(rng, 1, G.config().latent_dim);
  auto builder = [&](ad::Graph& g, int z_id) {
    const int img = G.forward(g, z_id, /*training=*/false);
    const int ctx = context_loss_node(g, img, g.constant(y_t), g.constant(w_t));
    const int pri = prior_loss_node(g, D, img, cfg.lambda);
    return g.add(ctx, pri);
  };
  return ad::grad_check(builder, z, eps);
}

void write_trajectory(const std::string& path, const std::vector<TrajectoryPoint>& trajectory) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write trajectory");
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    nlohmann::json j{{"iteration", i},
                     {"context", trajectory[i].context},
                     {"prior", trajectory[i].prior},
                     {"total", trajectory[i].total}};
    out << j.dump() << '\n';
  }
}

}  // namespace latentfill::inpaint
