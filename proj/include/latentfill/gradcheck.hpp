#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "latentfill/graph.hpp"

namespace latentfill::ad {

/// Builds a scalar loss from one input leaf. Must be deterministic: called
/// several times per check with perturbed copies of the input.
using LossBuilder = std::function<int(Graph&, int input_id)>;

/// Compares the analytic gradient of builder(input) against central finite
/// differences. Returns the max over coordinates of
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
/// Throws if two forward evaluations of the builder disagree.
double grad_check(const LossBuilder& builder, const Tensor& input, double eps = 1e-5);

struct OpCheckResult {
  std::string op;
  double max_rel_err = 0.0;
  bool passed = false;
};

/// Runs grad_check over every differentiable graph op at random shapes,
/// plus a composed multi-layer pipeline. One entry per op.
std::vector<OpCheckResult> check_all_ops(std::uint64_t seed, double eps = 1e-5,
                                         double tolerance = 1e-4);

}  // namespace latentfill::ad
