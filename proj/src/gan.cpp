#include "latentfill/gan.hpp"

#include <cmath>
#include <stdexcept>

namespace latentfill::gan {

int GanConfig::depth() const {
  int s = image_size, d = 0;
  while (s > 4) {
    s /= 2;
    ++d;
  }
  return d;
}

void GanConfig::validate() const {
  if (image_size != 16 && image_size != 32 && image_size != 64) {
    throw std::invalid_argument("image_size must be 16, 32 or 64, got " +
                                std::to_string(image_size));
  }
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("channels must be 1 or 3, got " + std::to_string(channels));
  }
  if (latent_dim < 1 || base_feature_maps < 1 || batch_size < 1 || epochs < 0) {
    throw std::invalid_argument("latent_dim/base_feature_maps/batch_size must be positive");
  }
}

namespace {

ad::Tensor normal_init(Rng& rng, ad::Shape shape, double sd) {
  ad::Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.normal(0.0, sd);
  t.requires_grad = true;
  return t;
}

ad::Tensor const_init(ad::Shape shape, double v) {
  ad::Tensor t(std::move(shape), v);
  t.requires_grad = true;
  return t;
}

constexpr double kWeightSd = 0.02;

}  // namespace

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

Generator::Generator(const GanConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const int depth = cfg_.depth();
  const int c0 = cfg_.base_feature_maps << (depth - 1);
  proj_w_ = normal_init(rng, {cfg_.latent_dim, c0 * 16}, kWeightSd);
  proj_b_ = const_init({c0 * 16}, 0.0);
  bn0_gamma_ = const_init({c0}, 1.0);
  bn0_beta_ = const_init({c0}, 0.0);
  bn0_.reset(c0);
  int cin = c0;
  for (int i = 0; i < depth; ++i) {
    const bool last = (i == depth - 1);
    const int cout = last ? cfg_.channels : cin / 2;
    Block blk;
    blk.w = normal_init(rng, {cin, cout, 4, 4}, kWeightSd);
    blk.b = const_init({cout}, 0.0);
    blk.has_bn = !last;
    if (blk.has_bn) {
      blk.gamma = const_init({cout}, 1.0);
      blk.beta = const_init({cout}, 0.0);
      blk.bn.reset(cout);
    }
    blocks_.push_back(std::move(blk));
    cin = cout;
  }
}

int Generator::forward(ad::Graph& g, int z, bool training) {
  const ad::Tensor& zt = g.val(z);
  if (zt.shape.size() != 2 || zt.shape[1] != cfg_.latent_dim) {
    throw std::invalid_argument("generator expects [N," + std::to_string(cfg_.latent_dim) +
                                "] latents, got " + ad::shape_str(zt.shape));
  }
  const int n = zt.shape[0];
  const int c0 = cfg_.base_feature_maps << (cfg_.depth() - 1);
  int h = g.add(g.matmul(z, g.leaf(proj_w_)), g.leaf(proj_b_));
  h = g.reshape(h, {n, c0, 4, 4});
  h = g.relu(g.batchnorm2d(h, g.leaf(bn0_gamma_), g.leaf(bn0_beta_), bn0_, training));
  for (auto& blk : blocks_) {
    h = g.add(g.conv_transpose2d(h, g.leaf(blk.w), 2, 1), g.leaf(blk.b));
    if (blk.has_bn) {
      h = g.relu(g.batchnorm2d(h, g.leaf(blk.gamma), g.leaf(blk.beta), blk.bn, training));
    } else {
      h = g.tanh(h);
    }
  }
  return h;
}

std::vector<ad::Tensor*> Generator::params() {
  std::vector<ad::Tensor*> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

NamedTensors Generator::named_params() {
  NamedTensors out{{"G.proj.w", &proj_w_},
                   {"G.proj.b", &proj_b_},
                   {"G.bn0.gamma", &bn0_gamma_},
                   {"G.bn0.beta", &bn0_beta_}};
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "G.block" + std::to_string(i);
    out.emplace_back(p + ".w", &blocks_[i].w);
    out.emplace_back(p + ".b", &blocks_[i].b);
    if (blocks_[i].has_bn) {
      out.emplace_back(p + ".gamma", &blocks_[i].gamma);
      out.emplace_back(p + ".beta", &blocks_[i].beta);
    }
  }
  return out;
}

NamedBuffers Generator::named_buffers() {
  NamedBuffers out{{"G.bn0.running_mean", &bn0_.running_mean},
                   {"G.bn0.running_var", &bn0_.running_var}};
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (!blocks_[i].has_bn) continue;
    const std::string p = "G.block" + std::to_string(i);
    out.emplace_back(p + ".running_mean", &blocks_[i].bn.running_mean);
    out.emplace_back(p + ".running_var", &blocks_[i].bn.running_var);
  }
  return out;
}

void Generator::set_requires_grad(bool v) {
  for (ad::Tensor* t : params()) t->requires_grad = v;
}

// ---------------------------------------------------------------------------
// Discriminator
// ---------------------------------------------------------------------------

Discriminator::Discriminator(const GanConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const int depth = cfg_.depth();
  int cin = cfg_.channels;
  int cout = cfg_.base_feature_maps;
  for (int i = 0; i < depth; ++i) {
    Block blk;
    blk.w = normal_init(rng, {cout, cin, 4, 4}, kWeightSd);
    blk.b = const_init({cout}, 0.0);
    blocks_.push_back(std::move(blk));
    cin = cout;
    cout *= 2;
  }
  head_w_ = normal_init(rng, {cin * 16, 1}, kWeightSd);
  head_b_ = const_init({1}, 0.0);
}

int Discriminator::forward(ad::Graph& g, int x) {
  const ad::Tensor& xt = g.val(x);
  if (xt.shape.size() != 4 || xt.shape[1] != cfg_.channels || xt.shape[2] != cfg_.image_size ||
      xt.shape[3] != cfg_.image_size) {
    throw std::invalid_argument("discriminator expects [N," + std::to_string(cfg_.channels) + "," +
                                std::to_string(cfg_.image_size) + "," +
                                std::to_string(cfg_.image_size) + "] images, got " +
                                ad::shape_str(xt.shape));
  }
  const int n = xt.shape[0];
  int h = x;
  for (auto& blk : blocks_) {
    h = g.leaky_relu(g.add(g.conv2d(h, g.leaf(blk.w), 2, 1), g.leaf(blk.b)), 0.2);
  }
  const int feat = g.val(h).shape[1] * 16;
  h = g.reshape(h, {n, feat});
  return g.sigmoid(g.add(g.matmul(h, g.leaf(head_w_)), g.leaf(head_b_)));
}

std::vector<ad::Tensor*> Discriminator::params() {
  std::vector<ad::Tensor*> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

NamedTensors Discriminator::named_params() {
  NamedTensors out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "D.block" + std::to_string(i);
    out.emplace_back(p + ".w", &blocks_[i].w);
    out.emplace_back(p + ".b", &blocks_[i].b);
  }
  out.emplace_back("D.head.w", &head_w_);
  out.emplace_back("D.head.b", &head_b_);
  return out;
}

void Discriminator::set_requires_grad(bool v) {
  for (ad::Tensor* t : params()) t->requires_grad = v;
}

// ---------------------------------------------------------------------------

ad::Tensor sample_latent(Rng& rng, int n, int latent_dim) {
  if (n < 1) throw std::invalid_argument("sample_latent: n must be >= 1");
  ad::Tensor z({n, latent_dim});
  for (double& v : z.data) v = rng.uniform(-1.0, 1.0);
  return z;
}

ad::Tensor generate(Generator& G, const ad::Tensor& z, bool training) {
  ad::Graph g;
  const int img = G.forward(g, g.constant(z), training);
  return g.val(img);
}

Image generate_image(Generator& G, const ad::Tensor& z) {
  return from_tensor(generate(G, z, false));
}

}  // namespace latentfill::gan
