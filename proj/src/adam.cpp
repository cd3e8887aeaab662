#include "latentfill/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace latentfill::ad {

void adam_step(Tensor& param, std::span<const double> grad, AdamState& state,
               const AdamParams& hp) {
  const std::size_t n = param.data.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw std::invalid_argument("adam_step: param/grad/state size mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grad[i];
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    param.data[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
  }
}

AdamOptimizer::AdamOptimizer(const std::vector<Tensor*>& params, AdamParams hp) : hp_(hp) {
  states_.reserve(params.size());
  for (const Tensor* p : params) states_.emplace_back(p->size());
}

void AdamOptimizer::step(const std::vector<Tensor*>& params) {
  if (params.size() != states_.size()) {
    throw std::invalid_argument("AdamOptimizer::step: parameter list changed size");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor* p = params[i];
    p->ensure_grad();
    adam_step(*p, p->grad, states_[i], hp_);
    p->zero_grad();
  }
}

}  // namespace latentfill::ad
