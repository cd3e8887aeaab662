#include "latentfill/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

#include "latentfill/rng.hpp"

namespace latentfill::ad {

double grad_check(const LossBuilder& builder, const Tensor& input, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");

  auto eval = [&](const Tensor& x) {
    Tensor copy = x;
    copy.requires_grad = false;
    copy.grad.clear();
    Graph g;
    const int loss = builder(g, g.leaf(copy));
    return g.val(loss).item();
  };

  const double f1 = eval(input);
  const double f2 = eval(input);
  if (f1 != f2) {
    throw std::runtime_error("grad_check: builder is non-deterministic (two forward passes disagree)");
  }

  Tensor work = input;
  work.requires_grad = true;
  work.zero_grad();
  Graph g;
  const int loss = builder(g, g.leaf(work));
  g.backward(loss);
  const std::vector<double> analytic = work.grad;

  Tensor probe = input;
  probe.requires_grad = false;
  probe.grad.clear();
  double max_rel = 0.0;
  for (std::size_t i = 0; i < probe.data.size(); ++i) {
    const double orig = probe.data[i];
    probe.data[i] = orig + eps;
    const double fp = eval(probe);
    probe.data[i] = orig - eps;
    const double fm = eval(probe);
    probe.data[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double denom = std::max(1e-8, std::fabs(analytic[i]) + std::fabs(numeric));
    max_rel = std::max(max_rel, std::fabs(analytic[i] - numeric) / denom);
  }
  return max_rel;
}

namespace {

Tensor rand_tensor(Rng& rng, Shape s, double lo, double hi) {
  Tensor t(std::move(s));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero, so finite differences never straddle the
// relu/abs kink or a log singularity.
Tensor rand_signed_away_from_zero(Rng& rng, Shape s, double lo_mag, double hi_mag) {
  Tensor t(std::move(s));
  for (double& v : t.data) {
    const double mag = rng.uniform(lo_mag, hi_mag);
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  return t;
}

}  // namespace

std::vector<OpCheckResult> check_all_ops(std::uint64_t seed, double eps, double tolerance) {
  Rng rng = Rng::substream(seed, "gradcheck");
  std::vector<OpCheckResult> results;

  auto run = [&](const std::string& name, const LossBuilder& b, const Tensor& in) {
    const double err = grad_check(b, in, eps);
    for (auto& r : results) {
      if (r.op == name) {
        r.max_rel_err = std::max(r.max_rel_err, err);
        r.passed = r.max_rel_err < tolerance;
        return;
      }
    }
    results.push_back({name, err, err < tolerance});
  };

  // Weighting constant so the loss is sensitive to each output element.
  auto weighted_sum = [](Graph& g, int x, const Tensor& R) {
    return g.sum(g.mul(x, g.constant(R)));
  };

  {
    Tensor A = rand_tensor(rng, {3, 4}, -1.0, 1.0);
    Tensor B = rand_tensor(rng, {4, 5}, -1.0, 1.0);
    Tensor R = rand_tensor(rng, {3, 5}, -1.0, 1.0);
    run("matmul", [&](Graph& g, int id) { return weighted_sum(g, g.matmul(id, g.constant(B)), R); }, A);
    run("matmul", [&](Graph& g, int id) { return weighted_sum(g, g.matmul(g.constant(A), id), R); }, B);
  }
  {
    Tensor A = rand_tensor(rng, {2, 3, 4, 4}, -1.0, 1.0);
    Tensor bias = rand_tensor(rng, {3}, -1.0, 1.0);
    Tensor R = rand_tensor(rng, {2, 3, 4, 4}, -1.0, 1.0);
    run("add", [&](Graph& g, int id) { return weighted_sum(g, g.add(id, g.constant(bias)), R); }, A);
    run("add", [&](Graph& g, int id) { return weighted_sum(g, g.add(g.constant(A), id), R); }, bias);
    Tensor B = rand_tensor(rng, {2, 3, 4, 4}, -1.0, 1.0);
    run("add", [&](Graph& g, int id) { return weighted_sum(g, g.add(g.constant(A), id), R); }, B);
  }
  {
    Tensor A = rand_tensor(rng, {5, 5}, -1.0, 1.0);
    Tensor B = rand_tensor(rng, {5, 5}, -1.0, 1.0);
    Tensor R = rand_tensor(rng, {5, 5}, -1.0, 1.0);
    run("sub", [&](Graph& g, int id) { return weighted_sum(g, g.sub(id, g.constant(B)), R); }, A);
    run("sub", [&](Graph& g, int id) { return weighted_sum(g, g.sub(g.constant(A), id), R); }, B);
    run("mul", [&](Graph& g, int id) { return weighted_sum(g, g.mul(id, g.constant(B)), R); }, A);
    run("scale", [&](Graph& g, int id) { return weighted_sum(g, g.scale(id, -1.7), R); }, A);
  }
  {
    // stride-2 pad-1 4x4 kernel, the shape used by the image networks
    Tensor X = rand_tensor(rng, {2, 3, 8, 8}, -1.0, 1.0);
    Tensor W = rand_tensor(rng, {4, 3, 4, 4}, -0.5, 0.5);
    Tensor R = rand_tensor(rng, {2, 4, 4, 4}, -1.0, 1.0);
    run("conv2d", [&](Graph& g, int id) { return weighted_sum(g, g.conv2d(id, g.constant(W), 2, 1), R); }, X);
    run("conv2d", [&](Graph& g, int id) { return weighted_sum(g, g.conv2d(g.constant(X), id, 2, 1), R); }, W);
    // stride-1 3x3
    Tensor W1 = rand_tensor(rng, {2, 3, 3, 3}, -0.5, 0.5);
    Tensor R1 = rand_tensor(rng, {2, 2, 8, 8}, -1.0, 1.0);
    run("conv2d", [&](Graph& g, int id) { return weighted_sum(g, g.conv2d(id, g.constant(W1), 1, 1), R1); }, X);
  }
  {
    Tensor Y = rand_tensor(rng, {2, 4, 4, 4}, -1.0, 1.0);
    Tensor W = rand_tensor(rng, {4, 3, 4, 4}, -0.5, 0.5);
    Tensor R = rand_tensor(rng, {2, 3, 8, 8}, -1.0, 1.0);
    run("conv_transpose2d",
        [&](Graph& g, int id) { return weighted_sum(g, g.conv_transpose2d(id, g.constant(W), 2, 1), R); }, Y);
    run("conv_transpose2d",
        [&](Graph& g, int id) { return weighted_sum(g, g.conv_transpose2d(g.constant(Y), id, 2, 1), R); }, W);
  }
  {
    Tensor X = rand_signed_away_from_zero(rng, {10, 10}, 0.05, 1.0);
    Tensor R = rand_tensor(rng, {10, 10}, -1.0, 1.0);
    run("relu", [&](Graph& g, int id) { return weighted_sum(g, g.relu(id), R); }, X);
    run("leaky_relu", [&](Graph& g, int id) { return weighted_sum(g, g.leaky_relu(id, 0.2), R); }, X);
    run("abs", [&](Graph& g, int id) { return weighted_sum(g, g.abs(id), R); }, X);
    Tensor X2 = rand_tensor(rng, {10, 10}, -3.0, 3.0);
    run("tanh", [&](Graph& g, int id) { return weighted_sum(g, g.tanh(id), R); }, X2);
    run("sigmoid", [&](Graph& g, int id) { return weighted_sum(g, g.sigmoid(id), R); }, X2);
    Tensor P = rand_tensor(rng, {10, 10}, 0.2, 2.0);
    run("log", [&](Graph& g, int id) { return weighted_sum(g, g.log(id), R); }, P);
    run("sum", [&](Graph& g, int id) { return g.sum(id); }, X2);
    run("mean", [&](Graph& g, int id) { return g.mean(id); }, X2);
    Tensor R2 = rand_tensor(rng, {2, 6}, -1.0, 1.0);
    Tensor X3 = rand_tensor(rng, {3, 4}, -1.0, 1.0);
    run("reshape", [&](Graph& g, int id) { return weighted_sum(g, g.reshape(id, {2, 6}), R2); }, X3);
  }
  {
    Tensor X = rand_tensor(rng, {2, 3, 4, 4}, -2.0, 2.0);
    Tensor gamma = rand_tensor(rng, {3}, 0.5, 1.5);
    Tensor beta = rand_tensor(rng, {3}, -0.5, 0.5);
    Tensor R = rand_tensor(rng, {2, 3, 4, 4}, -1.0, 1.0);
    for (bool training : {true, false}) {
      auto make = [&](int which) {
        return [&, which, training](Graph& g, int id) {
          // Fresh state per forward: running averages must not leak between
          // the repeated evaluations finite differencing performs.
          BatchNormState st(3);
          if (!training) {
            Rng r2 = Rng::substream(7, "bn-running");
            for (double& v : st.running_mean) v = r2.uniform(-0.5, 0.5);
            for (double& v : st.running_var) v = r2.uniform(0.5, 1.5);
          }
          int xs = which == 0 ? id : g.constant(X);
          int gs = which == 1 ? id : g.constant(gamma);
          int bs = which == 2 ? id : g.constant(beta);
          return g.sum(g.mul(g.batchnorm2d(xs, gs, bs, st, training), g.constant(R)));
        };
      };
      run("batchnorm2d", make(0), X);
      run("batchnorm2d", make(1), gamma);
      run("batchnorm2d", make(2), beta);
    }
  }
  {
    // Composed pipeline touching every op in one chain.
    Tensor W1 = rand_tensor(rng, {6, 16}, -0.5, 0.5);
    Tensor b1 = rand_tensor(rng, {16}, -0.2, 0.2);
    Tensor Wt = rand_tensor(rng, {4, 3, 4, 4}, -0.4, 0.4);
    Tensor gamma = rand_tensor(rng, {3}, 0.8, 1.2);
    Tensor beta = rand_tensor(rng, {3}, -0.2, 0.2);
    Tensor Wc = rand_tensor(rng, {2, 3, 3, 3}, -0.4, 0.4);
    Tensor R = rand_tensor(rng, {1, 2, 4, 4}, -1.0, 1.0);
    Tensor W3 = rand_tensor(rng, {32, 1}, -0.4, 0.4);
    Tensor z = rand_tensor(rng, {1, 6}, -1.0, 1.0);
    auto pipeline = [&](Graph& g, int id) {
      BatchNormState st(3);
      int h = g.add(g.matmul(id, g.constant(W1)), g.constant(b1));
      h = g.reshape(h, {1, 4, 2, 2});
      h = g.conv_transpose2d(h, g.constant(Wt), 2, 1);
      h = g.batchnorm2d(h, g.constant(gamma), g.constant(beta), st, true);
      h = g.relu(h);
      h = g.conv2d(h, g.constant(Wc), 1, 1);
      h = g.leaky_relu(h, 0.2);
      int side = g.mean(g.abs(g.mul(h, g.constant(R))));
      int flat = g.reshape(h, {1, 32});
      int p = g.sigmoid(g.matmul(flat, g.constant(W3)));
      int one = g.constant(Tensor({1, 1}, std::vector<double>{1.0}));
      int t = g.sub(g.scale(g.log(p), 0.7), g.scale(g.log(g.sub(one, p)), 0.3));
      return g.add(g.sum(t), side);
    };
    run("composed_pipeline", pipeline, z);
  }

  return results;
}

}  // namespace latentfill::ad
