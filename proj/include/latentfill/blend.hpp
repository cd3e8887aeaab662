#pragma once

#include <string>

#include "latentfill/image.hpp"
#include "latentfill/mask.hpp"

namespace latentfill::blend {

enum class Mode { overlay, blend };
Mode mode_from_string(const std::string& s);
const char* mode_name(Mode m);

/// Known pixels from y, missing pixels from g.
Image overlay(const Image& y, const Mask& m, const Image& g);

struct PoissonOptions {
  double rel_tolerance = 1e-8;
  int max_iter_factor = 10;  // iteration cap = factor * unknowns
  enum class Init { from_generated, zero } init = Init::from_generated;
  bool clamp_output = true;  // optimality checks disable this to see the raw solve
};

/// Gradient-domain reconstruction: solve the 4-neighbor discrete Laplace
/// equation  lap(x) = lap(g)  over missing pixels with Dirichlet values y on
/// known pixels, one independent SPD system per channel, by Jacobi
/// preconditioned conjugate gradient. Known pixels pass through bit-exactly;
/// solved values are clamped to [-1,1] after the solve.
Image poisson_blend(const Image& y, const Mask& m, const Image& g,
                    const PoissonOptions& opts = {});

Image finish(const Image& y, const Mask& m, const Image& g, Mode mode,
             const PoissonOptions& opts = {});

/// Sum of squared jumps across known/missing 4-neighbor pairs, all channels.
double seam_energy(const Image& x, const Mask& m);

}  // namespace latentfill::blend
