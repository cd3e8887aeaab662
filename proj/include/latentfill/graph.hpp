#pragma once

#include <memory>
#include <vector>

#include "latentfill/tensor.hpp"

namespace latentfill::ad {

enum class Op {
  leaf,
  matmul,
  add,   // same-shape, or bias broadcast ([C] over [N,C,H,W], [M] over [N,M])
  sub,
  mul,   // elementwise, same shape
  scale, // multiply by compile-time constant
  conv2d,
  conv_transpose2d,
  relu,
  leaky_relu,
  tanh_fn,
  sigmoid,
  batchnorm2d,
  reshape,
  sum,
  mean,
  abs_fn,
  log_fn,
};

const char* op_name(Op op);

/// Per-layer batchnorm persistent state: running averages used in inference
/// mode, updated with momentum during training-mode forward passes.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  explicit BatchNormState(int channels = 0) { reset(channels); }
  void reset(int channels) {
    running_mean.assign(channels, 0.0);
    running_var.assign(channels, 1.0);
  }
  int channels() const { return static_cast<int>(running_mean.size()); }
};

namespace detail {
struct BnCtx {
  std::vector<double> mean;     // per channel, as used for normalization
  std::vector<double> inv_std;  // 1/sqrt(var + eps)
  std::vector<double> xhat;     // normalized input
  bool training = false;
};
}  // namespace detail

struct Node {
  Op op = Op::leaf;
  int in0 = -1, in1 = -1, in2 = -1;
  Tensor value;             // owned forward result (unused for bound leaves)
  Tensor* bound = nullptr;  // external tensor for leaves; grads land in bound->grad
  bool needs_grad = false;
  std::vector<double> grad;  // d loss / d output, populated during backward
  double attr = 0.0;         // leaky_relu slope, scale factor
  int stride = 1, pad = 0;
  Shape saved_shape;  // reshape: input shape
  std::shared_ptr<detail::BnCtx> bn;
};

/// Define-by-run reverse-mode tape. Ops execute eagerly; backward() walks the
/// node list in reverse topological order (which is construction order).
///
/// Leaves bound via leaf() are borrowed: the caller keeps them alive and
/// unmodified between forward construction and backward(). Gradients
/// accumulate into Tensor::grad across backward calls until the caller
/// resets them.
class Graph {
 public:
  int leaf(Tensor& t);
  int constant(Tensor t);  // owned, never differentiated

  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int scale(int a, double c);
  int conv2d(int x, int w, int stride, int pad);
  int conv_transpose2d(int x, int w, int stride, int pad);
  int relu(int x);
  int leaky_relu(int x, double alpha);
  int tanh(int x);
  /// Logistic sigmoid with output clamped to [1e-7, 1 - 1e-7] so that
  /// log(s) and log(1 - s) stay finite downstream.
  int sigmoid(int x);
  int batchnorm2d(int x, int gamma, int beta, BatchNormState& state, bool training);
  int reshape(int x, Shape s);
  int sum(int x);
  int mean(int x);
  int abs(int x);
  int log(int x);

  const Tensor& val(int id) const;
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  /// Reverse pass from a scalar loss node. Populates grad on every
  /// requires_grad leaf reachable from the loss.
  void backward(int loss);

  static constexpr double kSigmoidClampLo = 1e-7;
  static constexpr double kSigmoidClampHi = 1.0 - 1e-7;

 private:
  int push(Node n);
  Node& at(int id);
  const Node& at(int id) const;
  const std::vector<double>& data_of(int id) const { return val(id).data; }
  void backward_one(int id);

  std::vector<Node> nodes_;
};

}  // namespace latentfill::ad
