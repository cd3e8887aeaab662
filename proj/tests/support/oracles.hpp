#pragma once

// Test-only reference implementations, written as plain loops independent of
// the library's kernels. Deliberately naive; used to cross-check results.

#include <cmath>
#include <vector>

#include "latentfill/inpaint.hpp"
#include "latentfill/mask.hpp"

namespace oracles {

// brute-force reference: double loop over the window, center excluded
inline latentfill::inpaint::ImportanceWeights weights_naive(const latentfill::Mask& m, int window) {
  const int r = window / 2;
  latentfill::inpaint::ImportanceWeights out;
  out.height = m.height;
  out.width = m.width;
  out.window_size = window;
  out.values.assign(static_cast<std::size_t>(m.height) * m.width, 0.0);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (m.at(y, x) == 0) continue;
      long missing = 0, neighbors = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= m.height || nx < 0 || nx >= m.width) continue;
          ++neighbors;
          missing += (m.at(ny, nx) == 0);
        }
      }
      if (neighbors > 0) {
        out.values[static_cast<std::size_t>(y) * m.width + x] =
            static_cast<double>(missing) / static_cast<double>(neighbors);
      }
    }
  }
  return out;
}

// Sliding-window convolution, one scalar at a time.
// x [N,C,H,W], w [F,C,kh,kw] -> y [N,F,Ho,Wo]
inline std::vector<double> conv2d_naive(const std::vector<double>& x, int N, int C, int H, int W,
                                        const std::vector<double>& w, int F, int kh, int kw,
                                        int stride, int pad, int& Ho, int& Wo) {
  Ho = (H + 2 * pad - kh) / stride + 1;
  Wo = (W + 2 * pad - kw) / stride + 1;
  std::vector<double> y(static_cast<std::size_t>(N) * F * Ho * Wo, 0.0);
  for (int n = 0; n < N; ++n)
    for (int f = 0; f < F; ++f)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          double acc = 0.0;
          for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride + ky - pad;
                const int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += w[((static_cast<std::size_t>(f) * C + c) * kh + ky) * kw + kx] *
                       x[((static_cast<std::size_t>(n) * C + c) * H + iy) * W + ix];
              }
          y[((static_cast<std::size_t>(n) * F + f) * Ho + oy) * Wo + ox] = acc;
        }
  return y;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace oracles
