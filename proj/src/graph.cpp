#include "latentfill/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace latentfill::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::scale: return "scale";
    case Op::conv2d: return "conv2d";
    case Op::conv_transpose2d: return "conv_transpose2d";
    case Op::relu: return "relu";
    case Op::leaky_relu: return "leaky_relu";
    case Op::tanh_fn: return "tanh";
    case Op::sigmoid: return "sigmoid";
    case Op::batchnorm2d: return "batchnorm2d";
    case Op::reshape: return "reshape";
    case Op::sum: return "sum";
    case Op::mean: return "mean";
    case Op::abs_fn: return "abs";
    case Op::log_fn: return "log";
  }
  return "?";
}

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                              " and " + shape_str(b));
}

void expect_4d(const char* op, const Shape& s) {
  if (s.size() != 4) {
    throw std::invalid_argument(std::string(op) + ": expected 4-d tensor, got " + shape_str(s));
  }
}

// ---------------------------------------------------------------------------
// Convolution kernels. All loops run in a fixed order so results are
// bit-reproducible. Layouts: x [N,C,H,W], w [F,C,kh,kw], y [N,F,Ho,Wo].
// ---------------------------------------------------------------------------

struct ConvDims {
  int N, C, H, W, F, kh, kw, s, p, Ho, Wo;
};

// y[n,f,oy,ox] += sum_{c,ky,kx} w[f,c,ky,kx] * x[n,c,oy*s+ky-p, ox*s+kx-p]
void conv_fwd(const double* x, const double* w, double* y, const ConvDims& d) {
  for (int n = 0; n < d.N; ++n) {
    for (int f = 0; f < d.F; ++f) {
      double* yp = y + (static_cast<std::size_t>(n) * d.F + f) * d.Ho * d.Wo;
      for (int c = 0; c < d.C; ++c) {
        const double* xp = x + (static_cast<std::size_t>(n) * d.C + c) * d.H * d.W;
        const double* wp = w + (static_cast<std::size_t>(f) * d.C + c) * d.kh * d.kw;
        for (int ky = 0; ky < d.kh; ++ky) {
          for (int kx = 0; kx < d.kw; ++kx) {
            const double wv = wp[ky * d.kw + kx];
            int ox0 = 0;
            if (d.p - kx > 0) ox0 = (d.p - kx + d.s - 1) / d.s;
            const int ox1 = std::min(d.Wo - 1, (d.W - 1 - kx + d.p) / d.s);
            if (ox1 < ox0) continue;
            for (int oy = 0; oy < d.Ho; ++oy) {
              const int iy = oy * d.s + ky - d.p;
              if (iy < 0 || iy >= d.H) continue;
              const double* xrow = xp + static_cast<std::size_t>(iy) * d.W;
              double* yrow = yp + static_cast<std::size_t>(oy) * d.Wo;
              if (d.s == 1) {
                const double* xq = xrow + (ox0 + kx - d.p);
                for (int ox = ox0; ox <= ox1; ++ox) yrow[ox] += wv * xq[ox - ox0];
              } else {
                int ix = ox0 * d.s + kx - d.p;
                for (int ox = ox0; ox <= ox1; ++ox, ix += d.s) yrow[ox] += wv * xrow[ix];
              }
            }
          }
        }
      }
    }
  }
}

// Adjoint of conv_fwd in its first argument:
// gx[n,c,iy,ix] += sum w[f,c,ky,kx] * y[n,f,oy,ox] over matching taps.
void conv_scatter(const double* y, const double* w, double* gx, const ConvDims& d) {
  for (int n = 0; n < d.N; ++n) {
    for (int f = 0; f < d.F; ++f) {
      const double* yp = y + (static_cast<std::size_t>(n) * d.F + f) * d.Ho * d.Wo;
      for (int c = 0; c < d.C; ++c) {
        double* gp = gx + (static_cast<std::size_t>(n) * d.C + c) * d.H * d.W;
        const double* wp = w + (static_cast<std::size_t>(f) * d.C + c) * d.kh * d.kw;
        for (int ky = 0; ky < d.kh; ++ky) {
          for (int kx = 0; kx < d.kw; ++kx) {
            const double wv = wp[ky * d.kw + kx];
            int ox0 = 0;
            if (d.p - kx > 0) ox0 = (d.p - kx + d.s - 1) / d.s;
            const int ox1 = std::min(d.Wo - 1, (d.W - 1 - kx + d.p) / d.s);
            if (ox1 < ox0) continue;
            for (int oy = 0; oy < d.Ho; ++oy) {
              const int iy = oy * d.s + ky - d.p;
              if (iy < 0 || iy >= d.H) continue;
              double* grow = gp + static_cast<std::size_t>(iy) * d.W;
              const double* yrow = yp + static_cast<std::size_t>(oy) * d.Wo;
              if (d.s == 1) {
                double* gq = grow + (ox0 + kx - d.p);
                for (int ox = ox0; ox <= ox1; ++ox) gq[ox - ox0] += wv * yrow[ox];
              } else {
                int ix = ox0 * d.s + kx - d.p;
                for (int ox = ox0; ox <= ox1; ++ox, ix += d.s) grow[ix] += wv * yrow[ox];
              }
            }
          }
        }
      }
    }
  }
}

// gw[f,c,ky,kx] += sum_{n,oy,ox} gy[n,f,oy,ox] * x[n,c,oy*s+ky-p, ox*s+kx-p]
void conv_wgrad(const double* x, const double* gy, double* gw, const ConvDims& d) {
  for (int n = 0; n < d.N; ++n) {
    for (int f = 0; f < d.F; ++f) {
      const double* gp = gy + (static_cast<std::size_t>(n) * d.F + f) * d.Ho * d.Wo;
      for (int c = 0; c < d.C; ++c) {
        const double* xp = x + (static_cast<std::size_t>(n) * d.C + c) * d.H * d.W;
        double* wp = gw + (static_cast<std::size_t>(f) * d.C + c) * d.kh * d.kw;
        for (int ky = 0; ky < d.kh; ++ky) {
          for (int kx = 0; kx < d.kw; ++kx) {
            int ox0 = 0;
            if (d.p - kx > 0) ox0 = (d.p - kx + d.s - 1) / d.s;
            const int ox1 = std::min(d.Wo - 1, (d.W - 1 - kx + d.p) / d.s);
            if (ox1 < ox0) continue;
            double acc = 0.0;
            for (int oy = 0; oy < d.Ho; ++oy) {
              const int iy = oy * d.s + ky - d.p;
              if (iy < 0 || iy >= d.H) continue;
              const double* xrow = xp + static_cast<std::size_t>(iy) * d.W;
              const double* grow = gp + static_cast<std::size_t>(oy) * d.Wo;
              if (d.s == 1) {
                const double* xq = xrow + (ox0 + kx - d.p);
                for (int ox = ox0; ox <= ox1; ++ox) acc += grow[ox] * xq[ox - ox0];
              } else {
                int ix = ox0 * d.s + kx - d.p;
                for (int ox = ox0; ox <= ox1; ++ox, ix += d.s) acc += grow[ox] * xrow[ix];
              }
            }
            wp[ky * d.kw + kx] += acc;
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

Node& Graph::at(int id) {
  if (id < 0 || id >= num_nodes()) throw std::out_of_range("graph node id out of range");
  return nodes_[static_cast<std::size_t>(id)];
}

const Node& Graph::at(int id) const {
  if (id < 0 || id >= num_nodes()) throw std::out_of_range("graph node id out of range");
  return nodes_[static_cast<std::size_t>(id)];
}

const Tensor& Graph::val(int id) const {
  const Node& n = at(id);
  return n.bound ? *n.bound : n.value;
}

int Graph::push(Node n) {
  if (n.op != Op::leaf) {
    n.needs_grad = false;
    for (int in : {n.in0, n.in1, n.in2}) {
      if (in >= 0 && at(in).needs_grad) n.needs_grad = true;
    }
    check_finite(n.value.data, std::string(op_name(n.op)) + " output");
  }
  nodes_.push_back(std::move(n));
  return num_nodes() - 1;
}

int Graph::leaf(Tensor& t) {
  check_finite(t.data, "leaf input");
  Node n;
  n.op = Op::leaf;
  n.bound = &t;
  n.needs_grad = t.requires_grad;
  nodes_.push_back(std::move(n));
  return num_nodes() - 1;
}

int Graph::constant(Tensor t) {
  check_finite(t.data, "constant input");
  Node n;
  n.op = Op::leaf;
  n.value = std::move(t);
  n.needs_grad = false;
  nodes_.push_back(std::move(n));
  return num_nodes() - 1;
}

int Graph::matmul(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[0]) {
    shape_error("matmul", A.shape, B.shape);
  }
  const int n = A.shape[0], k = A.shape[1], m = B.shape[1];
  Node node;
  node.op = Op::matmul;
  node.in0 = a;
  node.in1 = b;
  node.value = Tensor({n, m});
  double* out = node.value.data.data();
  const double* ap = A.data.data();
  const double* bp = B.data.data();
  for (int i = 0; i < n; ++i) {
    double* orow = out + static_cast<std::size_t>(i) * m;
    for (int kk = 0; kk < k; ++kk) {
      const double av = ap[static_cast<std::size_t>(i) * k + kk];
      const double* brow = bp + static_cast<std::size_t>(kk) * m;
      for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return push(std::move(node));
}

int Graph::add(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  Node node;
  node.op = Op::add;
  node.in0 = a;
  node.in1 = b;
  if (A.shape == B.shape) {
    node.value = Tensor(A.shape);
    for (int i = 0; i < A.size(); ++i) node.value.data[i] = A.data[i] + B.data[i];
  } else if (A.shape.size() == 4 && B.shape.size() == 1 && B.shape[0] == A.shape[1]) {
    // per-channel bias over [N,C,H,W]
    node.value = Tensor(A.shape);
    const int N = A.shape[0], C = A.shape[1], HW = A.shape[2] * A.shape[3];
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const double bias = B.data[c];
        const double* src = A.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        double* dst = node.value.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) dst[i] = src[i] + bias;
      }
    }
  } else if (A.shape.size() == 2 && B.shape.size() == 1 && B.shape[0] == A.shape[1]) {
    // per-column bias over [N,M]
    node.value = Tensor(A.shape);
    const int N = A.shape[0], M = A.shape[1];
    for (int n = 0; n < N; ++n) {
      for (int j = 0; j < M; ++j) {
        node.value.data[static_cast<std::size_t>(n) * M + j] =
            A.data[static_cast<std::size_t>(n) * M + j] + B.data[j];
      }
    }
  } else {
    shape_error("add", A.shape, B.shape);
  }
  return push(std::move(node));
}

int Graph::sub(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.shape != B.shape) shape_error("sub", A.shape, B.shape);
  Node node;
  node.op = Op::sub;
  node.in0 = a;
  node.in1 = b;
  node.value = Tensor(A.shape);
  for (int i = 0; i < A.size(); ++i) node.value.data[i] = A.data[i] - B.data[i];
  return push(std::move(node));
}

int Graph::mul(int a, int b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.shape != B.shape) shape_error("mul", A.shape, B.shape);
  Node node;
  node.op = Op::mul;
  node.in0 = a;
  node.in1 = b;
  node.value = Tensor(A.shape);
  for (int i = 0; i < A.size(); ++i) node.value.data[i] = A.data[i] * B.data[i];
  return push(std::move(node));
}

int Graph::scale(int a, double c) {
  const Tensor& A = val(a);
  Node node;
  node.op = Op::scale;
  node.in0 = a;
  node.attr = c;
  node.value = Tensor(A.shape);
  for (int i = 0; i < A.size(); ++i) node.value.data[i] = c * A.data[i];
  return push(std::move(node));
}

int Graph::conv2d(int x, int w, int stride, int pad) {
  const Tensor& X = val(x);
  const Tensor& W = val(w);
  expect_4d("conv2d", X.shape);
  expect_4d("conv2d", W.shape);
  if (X.shape[1] != W.shape[1]) shape_error("conv2d", X.shape, W.shape);
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
  ConvDims d{X.shape[0], X.shape[1], X.shape[2], X.shape[3],
             W.shape[0], W.shape[2], W.shape[3], stride, pad, 0, 0};
  d.Ho = (d.H + 2 * d.p - d.kh) / d.s + 1;
  d.Wo = (d.W + 2 * d.p - d.kw) / d.s + 1;
  if (d.H + 2 * d.p < d.kh || d.W + 2 * d.p < d.kw) shape_error("conv2d", X.shape, W.shape);
  Node node;
  node.op = Op::conv2d;
  node.in0 = x;
  node.in1 = w;
  node.stride = stride;
  node.pad = pad;
  node.value = Tensor({d.N, d.F, d.Ho, d.Wo});
  conv_fwd(X.data.data(), W.data.data(), node.value.data.data(), d);
  return push(std::move(node));
}

int Graph::conv_transpose2d(int x, int w, int stride, int pad) {
  const Tensor& Y = val(x);  // input plays the role of conv output
  const Tensor& W = val(w);
  expect_4d("conv_transpose2d", Y.shape);
  expect_4d("conv_transpose2d", W.shape);
  if (Y.shape[1] != W.shape[0]) shape_error("conv_transpose2d", Y.shape, W.shape);
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv_transpose2d: bad stride/pad");
  ConvDims d{Y.shape[0], W.shape[1], 0, 0, W.shape[0], W.shape[2], W.shape[3],
             stride, pad, Y.shape[2], Y.shape[3]};
  d.H = (d.Ho - 1) * d.s - 2 * d.p + d.kh;
  d.W = (d.Wo - 1) * d.s - 2 * d.p + d.kw;
  if (d.H < 1 || d.W < 1) shape_error("conv_transpose2d", Y.shape, W.shape);
  Node node;
  node.op = Op::conv_transpose2d;
  node.in0 = x;
  node.in1 = w;
  node.stride = stride;
  node.pad = pad;
  node.value = Tensor({d.N, d.C, d.H, d.W});
  conv_scatter(Y.data.data(), W.data.data(), node.value.data.data(), d);
  return push(std::move(node));
}

int Graph::relu(int x) {
  const Tensor& X = val(x);
  Node node;
  node.op = Op::relu;
  node.in0 = x;
  node.value = Tensor(X.shape);
  for (int i = 0; i < X.size(); ++i) node.value.data[i] = X.data[i] > 0.0 ? X.data[i] : 0.0;
  return push(std::move(node));
}

int Graph::leaky_relu(int x, double alpha) {
  const Tensor& X = val(x);
  Node node;
  node.op = Op::leaky_relu;
  node.in0 = x;
  node.attr = alpha;
  node.value = Tensor(X.shape);
  for (int i = 0; i < X.size(); ++i) {
    node.value.data[i] = X.data[i] > 0.0 ? X.data[i] : alpha * X.data[i];
  }
  return push(std::move(node));
}

int Graph::tanh(int x) {
  const Tensor& X = val(x);
  Node node;
  node.op = Op::tanh_fn;
  node.in0 = x;
  node.value = Tensor(X.shape);
  for (int i = 0; i < X.size(); ++i) node.value.data[i] = std::tanh(X.data[i]);
  return push(std::move(node));
}

int Graph::sigmoid(int x) {
  const Tensor& X = val(x);
  Node node;
  node.op = Op::sigmoid;
  node.in0 = x;
  node.value = Tensor(X.shape);
  for (int i = 0; i < X.size(); ++i) {
    double s = 1.0 / (1.0 + std::exp(-X.data[i]));
    s = std::min(kSigmoidClampHi, std::max(kSigmoidClampLo, s));
    node.value.data[i] = s;
  }
  return push(std::move(node));
}

int Graph::batchnorm2d(int x, int gamma, int beta, BatchNormState& state, bool training) {
  const Tensor& X = val(x);
  const Tensor& G = val(gamma);
  const Tensor& B = val(beta);
  expect_4d("batchnorm2d", X.shape);
  const int N = X.shape[0], C = X.shape[1], HW = X.shape[2] * X.shape[3];
  if (G.shape != Shape{C} || B.shape != Shape{C}) shape_error("batchnorm2d", X.shape, G.shape);
  if (state.channels() != C) {
    throw std::invalid_argument("batchnorm2d: state has " + std::to_string(state.channels()) +
                                " channels, input has " + std::to_string(C));
  }

  auto ctx = std::make_shared<detail::BnCtx>();
  ctx->training = training;
  ctx->mean.resize(C);
  ctx->inv_std.resize(C);
  ctx->xhat.resize(X.data.size());

  const double count = static_cast<double>(N) * HW;
  if (training) {
    for (int c = 0; c < C; ++c) {
      double m = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* src = X.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) m += src[i];
      }
      m /= count;
      double v = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* src = X.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) {
          const double dlt = src[i] - m;
          v += dlt * dlt;
        }
      }
      v /= count;
      ctx->mean[c] = m;
      ctx->inv_std[c] = 1.0 / std::sqrt(v + state.eps);
      state.running_mean[c] = state.momentum * state.running_mean[c] + (1.0 - state.momentum) * m;
      state.running_var[c] = state.momentum * state.running_var[c] + (1.0 - state.momentum) * v;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      ctx->mean[c] = state.running_mean[c];
      ctx->inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }

  Node node;
  node.op = Op::batchnorm2d;
  node.in0 = x;
  node.in1 = gamma;
  node.in2 = beta;
  node.value = Tensor(X.shape);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * C + c) * HW;
      const double m = ctx->mean[c], is = ctx->inv_std[c];
      const double g = G.data[c], b = B.data[c];
      for (int i = 0; i < HW; ++i) {
        const double xh = (X.data[base + i] - m) * is;
        ctx->xhat[base + i] = xh;
        node.value.data[base + i] = g * xh + b;
      }
    }
  }
  node.bn = std::move(ctx);
  return push(std::move(node));
}

int Graph::reshape(int x, Shape s) {
  const Tensor& X = val(x);
  if (numel(s) != X.size()) shape_error("reshape", X.shape, s);
  Node node;
  node.op = Op::reshape;
  node.in0 = x;
  node.saved_shape = X.shape;
  node.value = Tensor(std::move(s), X.data);
  return push(std::move(node));
}

int Graph::sum(int x) {
  const Tensor& X = val(x);
  double acc = 0.0;
  for (double v : X.data) acc += v;
  Node node;
  node.op = Op::sum;
  node.in0 = x;
  node.value = Tensor::scalar(acc);
  return push(std::move(node));
}

int Graph::mean(int x) {
  const Tensor& X = val(x);
  double acc = 0.0;
  for (double v : X.data) acc += v;
  Node node;
  node.op = Op::mean;
  node.in0 = x;
  node.value = Tensor::scalar(acc / X.size());
  return push(std::move(node));
}

int Graph::abs(int x) {
  const Tensor& X = val(x);
  Node node;
  node.op = Op::abs_fn;
  node.in0 = x;
  node.value = Tensor(X.shape);
  for (int i = 0; i < X.size(); ++i) node.value.data[i] = std::fabs(X.data[i]);
  return push(std::move(node));
}

int Graph::log(int x) {
  const Tensor& X = val(x);
  for (double v : X.data) {
    if (v <= 0.0) {
      throw std::invalid_argument("log: non-positive input " + std::to_string(v) +
                                  "; clamp probabilities before taking logs");
    }
  }
  Node node;
  node.op = Op::log_fn;
  node.in0 = x;
  node.value = Tensor(X.shape);
  for (int i = 0; i < X.size(); ++i) node.value.data[i] = std::log(X.data[i]);
  return push(std::move(node));
}

void Graph::backward(int loss) {
  const Tensor& L = val(loss);
  if (L.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(L.shape));
  }
  Node& ln = at(loss);
  if (!ln.needs_grad) return;  // nothing requires grad
  ln.grad.assign(1, 1.0);
  for (int id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.grad.empty()) continue;
    backward_one(id);
    if (n.op != Op::leaf) n.grad = {};  // release intermediate buffers early
  }
  // Finite check on every gradient that became externally visible.
  for (int id = 0; id <= loss; ++id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op == Op::leaf && n.bound && n.bound->requires_grad && !n.bound->grad.empty()) {
      check_finite(n.bound->grad, "leaf gradient");
    }
    if (n.op == Op::leaf) n.grad = {};
  }
}

void Graph::backward_one(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  const std::vector<double>& g = n.grad;

  auto grad_buf = [&](int in) -> std::vector<double>* {
    Node& src = at(in);
    if (!src.needs_grad) return nullptr;
    if (src.op == Op::leaf) {
      if (!src.bound) return nullptr;  // constants never accumulate
      src.bound->ensure_grad();
      return &src.bound->grad;
    }
    if (src.grad.empty()) src.grad.assign(src.bound ? src.bound->data.size() : src.value.data.size(), 0.0);
    return &src.grad;
  };

  switch (n.op) {
    case Op::leaf:
      // Gradients were accumulated directly into the bound tensor.
      break;
    case Op::matmul: {
      const Tensor& A = val(n.in0);
      const Tensor& B = val(n.in1);
      const int rows = A.shape[0], k = A.shape[1], m = B.shape[1];
      if (auto* ga = grad_buf(n.in0)) {
        for (int i = 0; i < rows; ++i) {
          const double* grow = g.data() + static_cast<std::size_t>(i) * m;
          for (int kk = 0; kk < k; ++kk) {
            const double* brow = B.data.data() + static_cast<std::size_t>(kk) * m;
            double acc = 0.0;
            for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
            (*ga)[static_cast<std::size_t>(i) * k + kk] += acc;
          }
        }
      }
      if (auto* gb = grad_buf(n.in1)) {
        for (int i = 0; i < rows; ++i) {
          const double* grow = g.data() + static_cast<std::size_t>(i) * m;
          const double* arow = A.data.data() + static_cast<std::size_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            double* brow = gb->data() + static_cast<std::size_t>(kk) * m;
            for (int j = 0; j < m; ++j) brow[j] += av * grow[j];
          }
        }
      }
      break;
    }
    case Op::add: {
      const Tensor& A = val(n.in0);
      const Tensor& B = val(n.in1);
      if (auto* ga = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
      }
      if (auto* gb = grad_buf(n.in1)) {
        if (A.shape == B.shape) {
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
        } else if (A.shape.size() == 4) {
          const int N = A.shape[0], C = A.shape[1], HW = A.shape[2] * A.shape[3];
          for (int nn = 0; nn < N; ++nn) {
            for (int c = 0; c < C; ++c) {
              const double* src = g.data() + (static_cast<std::size_t>(nn) * C + c) * HW;
              double acc = 0.0;
              for (int i = 0; i < HW; ++i) acc += src[i];
              (*gb)[c] += acc;
            }
          }
        } else {
          const int N = A.shape[0], M = A.shape[1];
          for (int nn = 0; nn < N; ++nn) {
            for (int j = 0; j < M; ++j) (*gb)[j] += g[static_cast<std::size_t>(nn) * M + j];
          }
        }
      }
      break;
    }
    case Op::sub: {
      if (auto* ga = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
      }
      if (auto* gb = grad_buf(n.in1)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
      }
      break;
    }
    case Op::mul: {
      const Tensor& A = val(n.in0);
      const Tensor& B = val(n.in1);
      if (auto* ga = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * B.data[i];
      }
      if (auto* gb = grad_buf(n.in1)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * A.data[i];
      }
      break;
    }
    case Op::scale: {
      if (auto* ga = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += n.attr * g[i];
      }
      break;
    }
    case Op::conv2d: {
      const Tensor& X = val(n.in0);
      const Tensor& W = val(n.in1);
      ConvDims d{X.shape[0], X.shape[1], X.shape[2], X.shape[3],
                 W.shape[0], W.shape[2], W.shape[3], n.stride, n.pad,
                 n.value.shape[2], n.value.shape[3]};
      if (auto* gx = grad_buf(n.in0)) conv_scatter(g.data(), W.data.data(), gx->data(), d);
      if (auto* gw = grad_buf(n.in1)) conv_wgrad(X.data.data(), g.data(), gw->data(), d);
      break;
    }
    case Op::conv_transpose2d: {
      const Tensor& Y = val(n.in0);
      const Tensor& W = val(n.in1);
      ConvDims d{Y.shape[0], W.shape[1], n.value.shape[2], n.value.shape[3],
                 W.shape[0], W.shape[2], W.shape[3], n.stride, n.pad,
                 Y.shape[2], Y.shape[3]};
      if (auto* gy = grad_buf(n.in0)) conv_fwd(g.data(), W.data.data(), gy->data(), d);
      if (auto* gw = grad_buf(n.in1)) conv_wgrad(g.data(), Y.data.data(), gw->data(), d);
      break;
    }
    case Op::relu: {
      const Tensor& X = val(n.in0);
      if (auto* gx = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (X.data[i] > 0.0) (*gx)[i] += g[i];
        }
      }
      break;
    }
    case Op::leaky_relu: {
      const Tensor& X = val(n.in0);
      if (auto* gx = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          (*gx)[i] += g[i] * (X.data[i] > 0.0 ? 1.0 : n.attr);
        }
      }
      break;
    }
    case Op::tanh_fn: {
      if (auto* gx = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double t = n.value.data[i];
          (*gx)[i] += g[i] * (1.0 - t * t);
        }
      }
      break;
    }
    case Op::sigmoid: {
      if (auto* gx = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = n.value.data[i];
          (*gx)[i] += g[i] * s * (1.0 - s);
        }
      }
      break;
    }
    case Op::batchnorm2d: {
      const Tensor& X = val(n.in0);
      const Tensor& G = val(n.in1);
      const detail::BnCtx& bn = *n.bn;
      const int N = X.shape[0], C = X.shape[1], HW = X.shape[2] * X.shape[3];
      const double count = static_cast<double>(N) * HW;
      auto* gx = grad_buf(n.in0);
      auto* gg = grad_buf(n.in1);
      auto* gb = grad_buf(n.in2);
      for (int c = 0; c < C; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int nn = 0; nn < N; ++nn) {
          const std::size_t base = (static_cast<std::size_t>(nn) * C + c) * HW;
          for (int i = 0; i < HW; ++i) {
            sum_g += g[base + i];
            sum_gx += g[base + i] * bn.xhat[base + i];
          }
        }
        if (gb) (*gb)[c] += sum_g;
        if (gg) (*gg)[c] += sum_gx;
        if (gx) {
          const double gam = G.data[c], is = bn.inv_std[c];
          if (bn.training) {
            const double mg = sum_g / count, mgx = sum_gx / count;
            for (int nn = 0; nn < N; ++nn) {
              const std::size_t base = (static_cast<std::size_t>(nn) * C + c) * HW;
              for (int i = 0; i < HW; ++i) {
                (*gx)[base + i] += gam * is * (g[base + i] - mg - bn.xhat[base + i] * mgx);
              }
            }
          } else {
            for (int nn = 0; nn < N; ++nn) {
              const std::size_t base = (static_cast<std::size_t>(nn) * C + c) * HW;
              for (int i = 0; i < HW; ++i) (*gx)[base + i] += gam * is * g[base + i];
            }
          }
        }
      }
      break;
    }
    case Op::reshape: {
      if (auto* gx = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
      }
      break;
    }
    case Op::sum: {
      if (auto* gx = grad_buf(n.in0)) {
        const double gv = g[0];
        for (double& v : *gx) v += gv;
      }
      break;
    }
    case Op::mean: {
      if (auto* gx = grad_buf(n.in0)) {
        const double gv = g[0] / static_cast<double>(gx->size());
        for (double& v : *gx) v += gv;
      }
      break;
    }
    case Op::abs_fn: {
      const Tensor& X = val(n.in0);
      if (auto* gx = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (X.data[i] > 0.0) {
            (*gx)[i] += g[i];
          } else if (X.data[i] < 0.0) {
            (*gx)[i] -= g[i];
          }
        }
      }
      break;
    }
    case Op::log_fn: {
      const Tensor& X = val(n.in0);
      if (auto* gx = grad_buf(n.in0)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] / X.data[i];
      }
      break;
    }
  }
}

}  // namespace latentfill::ad
