#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "silfit/vec.hpp"

namespace silfit {

struct BinarySilhouette {
  int width = 0, height = 0;
  std::vector<std::uint8_t> mask;  // row-major, 1 = foreground

  std::uint8_t at(int x, int y) const { return mask[std::size_t(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return mask[std::size_t(y) * width + x]; }

  int foreground_count() const {
    int n = 0;
    for (auto v : mask) n += v;
    return n;
  }
};

// Row-major real-valued grid with the same pixel-center convention as images.
struct Grid {
  int width = 0, height = 0;
  std::vector<double> v;

  Grid() = default;
  Grid(int w, int h, double fill = 0) : width(w), height(h), v(std::size_t(w) * h, fill) {}

  double at(int x, int y) const { return v[std::size_t(y) * width + x]; }
  double& at(int x, int y) { return v[std::size_t(y) * width + x]; }
};

namespace detail {

// 1D squared-distance transform via the lower envelope of parabolas
// (Felzenszwalb & Huttenlocher).
inline void dt1d(const double* f, double* out, int n, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double d = q - v[k];
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace detail

// Exact Euclidean distance (pixels, pixel-center metric) to the nearest
// foreground pixel center; 0 on foreground.
inline Grid distance_transform_l2(const BinarySilhouette& sil) {
  if (sil.foreground_count() == 0) throw EmptyForeground("mask has no foreground pixel");
  const int w = sil.width, h = sil.height;
  const double inf = 1e18;
  Grid sq(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) sq.at(x, y) = sil.at(x, y) ? 0.0 : inf;

  int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  // columns
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sq.at(x, y);
    detail::dt1d(f.data(), d.data(), h, v.data(), z.data());
    for (int y = 0; y < h; ++y) sq.at(x, y) = d[y];
  }
  // rows
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq.at(x, y);
    detail::dt1d(f.data(), d.data(), w, v.data(), z.data());
    for (int x = 0; x < w; ++x) sq.at(x, y) = d[x];
  }
  for (auto& e : sq.v) e = std::sqrt(e);
  return sq;
}

// Silhouette with the background replaced by a normalized distance ramp;
// value 1 exactly on foreground, strictly inside (0,1) on background.
struct SmoothedField {
  int width = 0, height = 0;  // padded dimensions
  int pad = 0;
  Grid values;
  double eps = 0;  // background range is [eps, 1-eps]

  double diagonal() const { return std::sqrt(double(width) * width + double(height) * height); }

  // uv in the *unpadded* image frame
  Vec2 to_padded(const Vec2& uv) const { return {uv.x + pad, uv.y + pad}; }
};

inline double bilinear_sample(const Grid& g, const Vec2& uv);
inline Vec2 bilinear_gradient(const Grid& g, const Vec2& uv);

inline SmoothedField build_smoothed_field(const BinarySilhouette& sil, int pad) {
  const int w = sil.width + 2 * pad, h = sil.height + 2 * pad;
  BinarySilhouette padded;
  padded.width = w;
  padded.height = h;
  padded.mask.assign(std::size_t(w) * h, 0);
  for (int y = 0; y < sil.height; ++y)
    for (int x = 0; x < sil.width; ++x) padded.at(x + pad, y + pad) = sil.at(x, y);

  int fg = padded.foreground_count();
  if (fg == 0) throw EmptyForeground("mask has no foreground pixel");
  if (fg == w * h) throw EmptyBackground("mask has no background pixel");

  Grid dist = distance_transform_l2(padded);
  const double diag = std::sqrt(double(w) * w + double(h) * h);

  SmoothedField field;
  field.width = w;
  field.height = h;
  field.pad = pad;
  field.eps = 1.0 / (2.0 * std::max(w, h));
  field.values = Grid(w, h, 1.0);

  // raw background values 1 - d_norm, then min-max over the background
  // rescaled into [eps, 1-eps] so no background pixel collides with foreground.
  double bmin = std::numeric_limits<double>::infinity();
  double bmax = -std::numeric_limits<double>::infinity();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!padded.at(x, y)) {
        double raw = 1.0 - dist.at(x, y) / diag;
        bmin = std::min(bmin, raw);
        bmax = std::max(bmax, raw);
      }
  double range = bmax - bmin;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!padded.at(x, y)) {
        double raw = 1.0 - dist.at(x, y) / diag;
        double t = range > 1e-15 ? (raw - bmin) / range : 0.5;
        field.values.at(x, y) = field.eps + t * (1.0 - 2.0 * field.eps);
      }
  return field;
}

namespace detail {

struct BilinearCell {
  int x0, y0, x1, y1;
  double fx, fy;
  bool clamped_x, clamped_y;
};

inline BilinearCell locate(const Grid& g, const Vec2& uv) {
  BilinearCell c{};
  double gx = uv.x - 0.5, gy = uv.y - 0.5;
  if (gx <= 0) {
    c.x0 = c.x1 = 0; c.fx = 0; c.clamped_x = true;
  } else if (gx >= g.width - 1) {
    c.x0 = c.x1 = g.width - 1; c.fx = 0; c.clamped_x = true;
  } else {
    c.x0 = int(gx); c.x1 = c.x0 + 1; c.fx = gx - c.x0; c.clamped_x = false;
  }
  if (gy <= 0) {
    c.y0 = c.y1 = 0; c.fy = 0; c.clamped_y = true;
  } else if (gy >= g.height - 1) {
    c.y0 = c.y1 = g.height - 1; c.fy = 0; c.clamped_y = true;
  } else {
    c.y0 = int(gy); c.y1 = c.y0 + 1; c.fy = gy - c.y0; c.clamped_y = false;
  }
  return c;
}

}  // namespace detail

// Bilinear interpolation of the 4 nearest pixel-center values; coordinates
// outside the grid clamp to the border samples.
inline double bilinear_sample(const Grid& g, const Vec2& uv) {
  auto c = detail::locate(g, uv);
  double v00 = g.at(c.x0, c.y0), v10 = g.at(c.x1, c.y0);
  double v01 = g.at(c.x0, c.y1), v11 = g.at(c.x1, c.y1);
  return (1 - c.fy) * ((1 - c.fx) * v00 + c.fx * v10) +
         c.fy * ((1 - c.fx) * v01 + c.fx * v11);
}

// Exact gradient of the bilinear interpolant; zero along a clamped axis.
inline Vec2 bilinear_gradient(const Grid& g, const Vec2& uv) {
  auto c = detail::locate(g, uv);
  double v00 = g.at(c.x0, c.y0), v10 = g.at(c.x1, c.y0);
  double v01 = g.at(c.x0, c.y1), v11 = g.at(c.x1, c.y1);
  Vec2 grad;
  if (!c.clamped_x)
    grad.x = (1 - c.fy) * (v10 - v00) + c.fy * (v11 - v01);
  if (!c.clamped_y)
    grad.y = (1 - c.fx) * (v01 - v00) + c.fx * (v11 - v10);
  return grad;
}

inline Grid to_grid(const BinarySilhouette& sil) {
  Grid g(sil.width, sil.height);
  for (std::size_t i = 0; i < sil.mask.size(); ++i) g.v[i] = sil.mask[i];
  return g;
}

}  // namespace silfit
