#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "silfit/camera.hpp"

namespace silfit {

// Translate the bounding-box center to the origin and uniform-scale so the
// bbox diagonal equals 1.
inline PointCloud normalize_cloud(const PointCloud& cloud) {
  if (cloud.size() == 0) throw EmptyCloud("cannot normalize empty cloud");
  Vec3 lo = cloud.points[0], hi = cloud.points[0];
  for (const Vec3& p : cloud.points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  Vec3 d = hi - lo;
  double diag = d.norm();
  if (diag <= 1e-12) throw DegenerateCloud("bounding-box diagonal below 1e-12");
  Vec3 center = 0.5 * (lo + hi);
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back((p - center) * (1.0 / diag));
  return out;
}

namespace detail {

// Uniform hash grid for exact nearest-neighbor queries; expanding ring search
// with an exact termination bound.
class NNGrid {
 public:
  explicit NNGrid(const std::vector<Vec3>& pts) : pts_(pts) {
    lo_ = hi_ = pts[0];
    for (const Vec3& p : pts) {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y), std::min(lo_.z, p.z)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y), std::max(hi_.z, p.z)};
    }
    double diag = (hi_ - lo_).norm();
    double target = std::cbrt(double(pts.size()));
    cell_ = diag > 0 ? std::max(diag / std::max(target, 1.0), 1e-12) : 1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(pts[i])].push_back(int(i));
  }

  double nearest_distance(const Vec3& q) const {
    long long cx, cy, cz;
    coords(q, cx, cy, cz);
    long long gx1, gy1, gz1;
    coords(hi_, gx1, gy1, gz1);
    // grid cells span [0, g?1]; beyond this ring everything has been scanned
    long long max_ring = 0;
    max_ring = std::max(max_ring, std::max(std::llabs(cx), std::llabs(cx - gx1)));
    max_ring = std::max(max_ring, std::max(std::llabs(cy), std::llabs(cy - gy1)));
    max_ring = std::max(max_ring, std::max(std::llabs(cz), std::llabs(cz - gz1)));
    double best = std::numeric_limits<double>::infinity();
    for (long long r = 0; r <= max_ring; ++r) {
      // anything in an unscanned ring >= r lies at least (r-1)*cell away
      if (r > 1 && best <= double(r - 1) * cell_) break;
      scan_ring(q, cx, cy, cz, r, best);
    }
    return best;
  }

 private:
  static long long fl(double v) { return (long long)std::floor(v); }

  void coords(const Vec3& p, long long& x, long long& y, long long& z) const {
    x = fl((p.x - lo_.x) / cell_);
    y = fl((p.y - lo_.y) / cell_);
    z = fl((p.z - lo_.z) / cell_);
  }

  std::uint64_t key(const Vec3& p) const {
    long long x, y, z;
    coords(p, x, y, z);
    return pack(x, y, z);
  }

  static std::uint64_t pack(long long x, long long y, long long z) {
    return (std::uint64_t(x & 0x1fffff) << 42) | (std::uint64_t(y & 0x1fffff) << 21) |
           std::uint64_t(z & 0x1fffff);
  }

  bool scan_ring(const Vec3& q, long long cx, long long cy, long long cz, long long r,
                 double& best) const {
    bool any = false;
    for (long long dx = -r; dx <= r; ++dx)
      for (long long dy = -r; dy <= r; ++dy)
        for (long long dz = -r; dz <= r; ++dz) {
          if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != r) continue;
          auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
          if (it == cells_.end()) continue;
          any = true;
          for (int idx : it->second) {
            double d = (pts_[idx] - q).norm();
            best = std::min(best, d);
          }
        }
    return any;
  }

  const std::vector<Vec3>& pts_;
  Vec3 lo_, hi_;
  double cell_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

inline double mean_nearest(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  NNGrid grid(to);
  double sum = 0;
  for (const Vec3& p : from) sum += grid.nearest_distance(p);
  return sum / double(from.size());
}

}  // namespace detail

// Symmetric mean nearest-neighbor distance; exact.
inline double chamfer_distance(const PointCloud& p1, const PointCloud& p2, bool x100 = false) {
  if (p1.size() == 0 || p2.size() == 0) throw EmptyCloud("chamfer on empty cloud");
  double d = detail::mean_nearest(p1.points, p2.points) +
             detail::mean_nearest(p2.points, p1.points);
  return x100 ? 100.0 * d : d;
}

struct VoxelGrid {
  int res = 0;
  Vec3 lo, hi;
  std::vector<std::uint8_t> occ;  // res^3, x fastest
  int out_of_bounds = 0;

  std::size_t index(int x, int y, int z) const {
    return (std::size_t(z) * res + y) * res + x;
  }
  int count() const {
    int n = 0;
    for (auto v : occ) n += v;
    return n;
  }
};

inline VoxelGrid voxelize(const PointCloud& cloud, int res,
                          const Vec3& lo = {-0.5, -0.5, -0.5},
                          const Vec3& hi = {0.5, 0.5, 0.5}) {
  Vec3 ext = hi - lo;
  if (res < 1 || ext.x <= 0 || ext.y <= 0 || ext.z <= 0)
    throw BadParams("voxelize: degenerate bounds or resolution < 1");
  VoxelGrid g;
  g.res = res;
  g.lo = lo;
  g.hi = hi;
  g.occ.assign(std::size_t(res) * res * res, 0);
  auto bin = [&](double v, double l, double e) {
    int i = int(std::floor((v - l) / e * res));
    return i;
  };
  for (const Vec3& p : cloud.points) {
    int x = bin(p.x, lo.x, ext.x), y = bin(p.y, lo.y, ext.y), z = bin(p.z, lo.z, ext.z);
    // points exactly on the max bound clamp into the last cell
    if (x == res && p.x == hi.x) x = res - 1;
    if (y == res && p.y == hi.y) y = res - 1;
    if (z == res && p.z == hi.z) z = res - 1;
    if (x < 0 || y < 0 || z < 0 || x >= res || y >= res || z >= res) {
      ++g.out_of_bounds;
      continue;
    }
    g.occ[g.index(x, y, z)] = 1;
  }
  return g;
}

// |A and B| / |A or B|; 1 when both grids are empty.
inline double volumetric_iou(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.res != b.res || (a.lo - b.lo).norm() > 1e-12 || (a.hi - b.hi).norm() > 1e-12)
    throw GridMismatch("IoU grids differ in resolution or bounds");
  long long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.occ.size(); ++i) {
    inter += a.occ[i] & b.occ[i];
    uni += a.occ[i] | b.occ[i];
  }
  if (uni == 0) return 1.0;
  return double(inter) / double(uni);
}

}  // namespace silfit
