#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latentfill/tensor.hpp"

namespace latentfill::ad {

/// First/second moment accumulators plus the step counter for one parameter
/// tensor.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamState(int n = 0) { reset(n); }
  void reset(int n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place. grad must match param's length.
void adam_step(Tensor& param, std::span<const double> grad, AdamState& state,
               const AdamParams& hp);

/// Per-parameter Adam states for a fixed-order parameter list. Holds no
/// pointers, so the owning object stays movable; callers pass the parameter
/// list (in the same order) to every step().
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const std::vector<Tensor*>& params, AdamParams hp);

  /// Applies each parameter's accumulated grad (allocating zeros if absent),
  /// then clears it.
  void step(const std::vector<Tensor*>& params);
  AdamParams& hyper() { return hp_; }
  std::vector<AdamState>& states() { return states_; }
  const std::vector<AdamState>& states() const { return states_; }

 private:
  std::vector<AdamState> states_;
  AdamParams hp_;
};

}  // namespace latentfill::ad
