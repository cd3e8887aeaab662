#include "latentfill/blend.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace latentfill::blend {

Mode mode_from_string(const std::string& s) {
  if (s == "overlay") return Mode::overlay;
  if (s == "blend") return Mode::blend;
  throw std::invalid_argument("unknown blend mode '" + s + "' (valid: overlay, blend)");
}

const char* mode_name(Mode m) { return m == Mode::overlay ? "overlay" : "blend"; }

namespace {

void check_dims(const Image& y, const Mask& m, const Image& g) {
  if (!y.same_dims(g)) {
    throw std::invalid_argument("blend: image dims disagree");
  }
  if (m.height != y.height || m.width != y.width) {
    throw std::invalid_argument("blend: mask dims do not match the images");
  }
}

constexpr int kDy[4] = {-1, 1, 0, 0};
constexpr int kDx[4] = {0, 0, -1, 1};

}  // namespace

Image overlay(const Image& y, const Mask& m, const Image& g) {
  check_dims(y, m, g);
  Image out = y;
  for (int c = 0; c < y.channels; ++c) {
    for (int yy = 0; yy < y.height; ++yy) {
      for (int xx = 0; xx < y.width; ++xx) {
        if (m.at(yy, xx) == 0) out.at(c, yy, xx) = g.at(c, yy, xx);
      }
    }
  }
  return out;
}

Image poisson_blend(const Image& y, const Mask& m, const Image& g, const PoissonOptions& opts) {
  check_dims(y, m, g);
  const int h = m.height, w = m.width;

  // unknown ids for missing pixels
  std::vector<int> id(static_cast<std::size_t>(h) * w, -1);
  std::vector<std::pair<int, int>> coords;
  for (int yy = 0; yy < h; ++yy) {
    for (int xx = 0; xx < w; ++xx) {
      if (m.at(yy, xx) == 0) {
        id[static_cast<std::size_t>(yy) * w + xx] = static_cast<int>(coords.size());
        coords.emplace_back(yy, xx);
      }
    }
  }
  const int n = static_cast<int>(coords.size());
  if (n == 0) return y;  // nothing to reconstruct

  // Every missing component must see at least one known pixel, otherwise
  // the Dirichlet problem is singular there.
  {
    std::vector<char> seen(coords.size(), 0);
    for (int start = 0; start < n; ++start) {
      if (seen[static_cast<std::size_t>(start)]) continue;
      bool touches_known = false;
      std::queue<int> q;
      q.push(start);
      seen[static_cast<std::size_t>(start)] = 1;
      while (!q.empty()) {
        const auto [cy, cx] = coords[static_cast<std::size_t>(q.front())];
        q.pop();
        for (int k = 0; k < 4; ++k) {
          const int ny = cy + kDy[k], nx = cx + kDx[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (m.at(ny, nx) == 1) {
            touches_known = true;
          } else {
            const int nid = id[static_cast<std::size_t>(ny) * w + nx];
            if (!seen[static_cast<std::size_t>(nid)]) {
              seen[static_cast<std::size_t>(nid)] = 1;
              q.push(nid);
            }
          }
        }
      }
      if (!touches_known) {
        const auto [cy, cx] = coords[static_cast<std::size_t>(start)];
        throw std::runtime_error("poisson_blend: missing component containing pixel (" +
                                 std::to_string(cy) + "," + std::to_string(cx) +
                                 ") has no known boundary");
      }
    }
  }

  // per-unknown degree (in-bounds 4-neighbors) = diagonal of the Laplacian
  std::vector<double> deg(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto [cy, cx] = coords[static_cast<std::size_t>(k)];
    int d = 0;
    for (int t = 0; t < 4; ++t) {
      const int ny = cy + kDy[t], nx = cx + kDx[t];
      if (ny >= 0 && ny < h && nx >= 0 && nx < w) ++d;
    }
    deg[static_cast<std::size_t>(k)] = d;
  }

  auto apply_A = [&](const std::vector<double>& x, std::vector<double>& out) {
    for (int k = 0; k < n; ++k) {
      const auto [cy, cx] = coords[static_cast<std::size_t>(k)];
      double acc = deg[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
      for (int t = 0; t < 4; ++t) {
        const int ny = cy + kDy[t], nx = cx + kDx[t];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const int nid = id[static_cast<std::size_t>(ny) * w + nx];
        if (nid >= 0) acc -= x[static_cast<std::size_t>(nid)];
      }
      out[static_cast<std::size_t>(k)] = acc;
    }
  };

  auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += a[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(k)];
    return acc;
  };

  Image out = y;  // known pixels pass through bit-exactly
  std::vector<double> b(static_cast<std::size_t>(n)), x(static_cast<std::size_t>(n));
  std::vector<double> r(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n)),
      p(static_cast<std::size_t>(n)), q(static_cast<std::size_t>(n));

  for (int c = 0; c < y.channels; ++c) {
    // rhs: divergence of the guidance field plus Dirichlet boundary terms
    for (int k = 0; k < n; ++k) {
      const auto [cy, cx] = coords[static_cast<std::size_t>(k)];
      double acc = 0.0;
      for (int t = 0; t < 4; ++t) {
        const int ny = cy + kDy[t], nx = cx + kDx[t];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        acc += g.at(c, cy, cx) - g.at(c, ny, nx);
        if (m.at(ny, nx) == 1) acc += y.at(c, ny, nx);
      }
      b[static_cast<std::size_t>(k)] = acc;
      x[static_cast<std::size_t>(k)] =
          opts.init == PoissonOptions::Init::from_generated ? g.at(c, cy, cx) : 0.0;
    }

    const double b_norm = std::sqrt(dot(b, b));
    const long max_iters = std::max(1L, static_cast<long>(opts.max_iter_factor) * n);
    if (b_norm == 0.0) {
      x.assign(static_cast<std::size_t>(n), 0.0);
    } else {
      apply_A(x, q);
      for (int k = 0; k < n; ++k) r[static_cast<std::size_t>(k)] = b[static_cast<std::size_t>(k)] - q[static_cast<std::size_t>(k)];
      for (int k = 0; k < n; ++k) z[static_cast<std::size_t>(k)] = r[static_cast<std::size_t>(k)] / deg[static_cast<std::size_t>(k)];
      p = z;
      double rz = dot(r, z);
      double res = std::sqrt(dot(r, r));
      long it = 0;
      while (res > opts.rel_tolerance * b_norm) {
        if (it++ >= max_iters) {
          throw std::runtime_error("poisson_blend: conjugate gradient did not converge (residual " +
                                   std::to_string(res / b_norm) + " after " +
                                   std::to_string(max_iters) + " iterations)");
        }
        apply_A(p, q);
        const double alpha = rz / dot(p, q);
        for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] += alpha * p[static_cast<std::size_t>(k)];
        for (int k = 0; k < n; ++k) r[static_cast<std::size_t>(k)] -= alpha * q[static_cast<std::size_t>(k)];
        for (int k = 0; k < n; ++k) z[static_cast<std::size_t>(k)] = r[static_cast<std::size_t>(k)] / deg[static_cast<std::size_t>(k)];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int k = 0; k < n; ++k) p[static_cast<std::size_t>(k)] = z[static_cast<std::size_t>(k)] + beta * p[static_cast<std::size_t>(k)];
        res = std::sqrt(dot(r, r));
      }
    }

    // clamp after, never during, the solve
    for (int k = 0; k < n; ++k) {
      const auto [cy, cx] = coords[static_cast<std::size_t>(k)];
      out.at(c, cy, cx) =
          opts.clamp_output ? clamp_unit(x[static_cast<std::size_t>(k)]) : x[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

Image finish(const Image& y, const Mask& m, const Image& g, Mode mode, const PoissonOptions& opts) {
  return mode == Mode::overlay ? overlay(y, m, g) : poisson_blend(y, m, g, opts);
}

double seam_energy(const Image& x, const Mask& m) {
  if (m.height != x.height || m.width != x.width) {
    throw std::invalid_argument("seam_energy: mask dims do not match the image");
  }
  double acc = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    for (int yy = 0; yy < x.height; ++yy) {
      for (int xx = 0; xx < x.width; ++xx) {
        if (m.at(yy, xx) != 0) continue;
        for (int t = 0; t < 4; ++t) {
          const int ny = yy + kDy[t], nx = xx + kDx[t];
          if (ny < 0 || ny >= x.height || nx < 0 || nx >= x.width) continue;
          if (m.at(ny, nx) == 1) {
            const double d = x.at(c, ny, nx) - x.at(c, yy, xx);
            acc += d * d;
          }
        }
      }
    }
  }
  return acc;
}

}  // namespace latentfill::blend
