#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "silfit/camera.hpp"
#include "silfit/fit.hpp"
#include "silfit/silhouette.hpp"

namespace silfit {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

enum class PrimitiveKind { sphere, box, torus, composite_chair, composite_plane };

inline PrimitiveKind primitive_kind_from(const std::string& s) {
  if (s == "sphere") return PrimitiveKind::sphere;
  if (s == "box") return PrimitiveKind::box;
  if (s == "torus") return PrimitiveKind::torus;
  if (s == "chair" || s == "composite_chair") return PrimitiveKind::composite_chair;
  if (s == "plane" || s == "composite_plane") return PrimitiveKind::composite_plane;
  throw BadParams("unknown shape: " + s);
}

namespace detail {

inline void append_mesh(TriMesh& dst, const TriMesh& src) {
  int base = int(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (auto t : src.triangles)
    dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

inline void normalize_mesh(TriMesh& mesh) {
  Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const Vec3& p : mesh.vertices) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  double diag = (hi - lo).norm();
  if (diag <= 1e-12) throw BadParams("degenerate mesh");
  Vec3 c = 0.5 * (lo + hi);
  for (Vec3& p : mesh.vertices) p = (p - c) * (1.0 / diag);
}

}  // namespace detail

// Axis-aligned box: 8 vertices, 12 triangles, outward-facing.
inline TriMesh make_box(const Vec3& center, const Vec3& half_extents) {
  if (half_extents.x <= 0 || half_extents.y <= 0 || half_extents.z <= 0)
    throw BadParams("box half-extents must be positive");
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back({center.x + ((i & 1) ? half_extents.x : -half_extents.x),
                          center.y + ((i & 2) ? half_extents.y : -half_extents.y),
                          center.z + ((i & 4) ? half_extents.z : -half_extents.z)});
  }
  const int f[6][4] = {{0, 2, 3, 1},   // z-
                       {4, 5, 7, 6},   // z+
                       {0, 1, 5, 4},   // y-
                       {2, 6, 7, 3},   // y+
                       {0, 4, 6, 2},   // x-
                       {1, 3, 7, 5}};  // x+
  for (auto& q : f) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

// Icosphere; vertex count 10*4^subdiv + 2.
inline TriMesh make_sphere(int subdiv) {
  if (subdiv < 0 || subdiv > 7) throw BadParams("sphere subdiv out of range");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& v : m.vertices) v = v.normalized();

  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 v = (m.vertices[a] + m.vertices[b]).normalized();
      int idx = int(m.vertices.size());
      m.vertices.push_back(v);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.triangles.size() * 4);
    for (auto tri : m.triangles) {
      int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  detail::normalize_mesh(m);
  return m;
}

inline TriMesh make_torus(double major, double minor, int nu = 48, int nv = 24) {
  if (major <= 0 || minor <= 0 || minor >= major || nu < 3 || nv < 3)
    throw BadParams("bad torus parameters");
  TriMesh m;
  const double pi2 = 2.0 * 3.14159265358979323846;
  for (int i = 0; i < nu; ++i) {
    double a = pi2 * i / nu;
    for (int j = 0; j < nv; ++j) {
      double b = pi2 * j / nv;
      double r = major + minor * std::cos(b);
      m.vertices.push_back({r * std::cos(a), minor * std::sin(b), r * std::sin(a)});
    }
  }
  auto idx = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      m.triangles.push_back({a, b, c});
      m.triangles.push_back({a, c, d});
    }
  detail::normalize_mesh(m);
  return m;
}

// Seat, back, and four legs; non-convex union of boxes.
inline TriMesh make_chair() {
  TriMesh m;
  detail::append_mesh(m, make_box({0, 0.0, 0}, {0.45, 0.05, 0.45}));          // seat
  detail::append_mesh(m, make_box({0, 0.5, -0.42}, {0.45, 0.45, 0.05}));      // back
  for (double sx : {-0.38, 0.38})
    for (double sz : {-0.38, 0.38})
      detail::append_mesh(m, make_box({sx, -0.45, sz}, {0.06, 0.4, 0.06}));   // legs
  detail::normalize_mesh(m);
  return m;
}

// Fuselage, wings, horizontal and vertical tail.
inline TriMesh make_plane_shape() {
  TriMesh m;
  detail::append_mesh(m, make_box({0, 0, 0}, {0.12, 0.12, 0.85}));        // fuselage
  detail::append_mesh(m, make_box({0, 0, 0.15}, {0.95, 0.04, 0.22}));     // wings
  detail::append_mesh(m, make_box({0, 0, -0.72}, {0.38, 0.03, 0.12}));    // tailplane
  detail::append_mesh(m, make_box({0, 0.22, -0.74}, {0.03, 0.2, 0.1}));   // fin
  detail::normalize_mesh(m);
  return m;
}

inline TriMesh make_primitive(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::sphere: return make_sphere(3);
    case PrimitiveKind::box: {
      TriMesh m = make_box({0, 0, 0}, {0.5, 0.35, 0.25});
      detail::normalize_mesh(m);
      return m;
    }
    case PrimitiveKind::torus: return make_torus(1.0, 0.35);
    case PrimitiveKind::composite_chair: return make_chair();
    case PrimitiveKind::composite_plane: return make_plane_shape();
  }
  throw BadParams("unknown primitive kind");
}

// Cameras at equally spaced azimuths on a circle, all looking at the origin.
inline std::vector<CameraPose> ring_cameras(int count, double radius, double elevation_deg,
                                            double focal, int width, int height) {
  if (count < 1) throw BadParams("ring_cameras: count < 1");
  if (radius <= 0.5) throw BadParams("ring_cameras: radius must exceed 0.5");
  const double deg = 3.14159265358979323846 / 180.0;
  std::vector<CameraPose> poses;
  for (int k = 0; k < count; ++k) {
    double az = 360.0 * k / count * deg;
    double el = elevation_deg * deg;
    Vec3 eye{radius * std::cos(el) * std::cos(az), radius * std::sin(el),
             radius * std::cos(el) * std::sin(az)};
    poses.push_back(look_at_camera(eye, {0, 0, 0}, {0, 1, 0}, focal, width, height));
  }
  return poses;
}

// Binary coverage rasterization: pixel = 1 iff its center is covered by any
// projected triangle. Top-left fill rule, no depth buffer.
inline BinarySilhouette rasterize_silhouette(const TriMesh& mesh, const CameraPose& pose) {
  BinarySilhouette sil;
  sil.width = pose.width;
  sil.height = pose.height;
  sil.mask.assign(std::size_t(pose.width) * pose.height, 0);

  std::vector<Projection2> proj(mesh.vertices.size());
  std::vector<std::uint8_t> ok(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    ok[i] = try_project(pose, mesh.vertices[i], proj[i]) ? 1 : 0;

  for (auto tri : mesh.triangles) {
    if (!ok[tri[0]] || !ok[tri[1]] || !ok[tri[2]]) continue;
    Vec2 a = proj[tri[0]].uv, b = proj[tri[1]].uv, c = proj[tri[2]].uv;
    double area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (area2 == 0) continue;
    if (area2 < 0) std::swap(b, c);

    double minx = std::min({a.x, b.x, c.x}), maxx = std::max({a.x, b.x, c.x});
    double miny = std::min({a.y, b.y, c.y}), maxy = std::max({a.y, b.y, c.y});
    int x0 = std::max(0, int(std::floor(minx - 0.5)));
    int x1 = std::min(pose.width - 1, int(std::ceil(maxx - 0.5)));
    int y0 = std::max(0, int(std::floor(miny - 0.5)));
    int y1 = std::min(pose.height - 1, int(std::ceil(maxy - 0.5)));

    const Vec2 v[3] = {a, b, c};
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double px = x + 0.5, py = y + 0.5;
        bool inside = true;
        for (int e = 0; e < 3 && inside; ++e) {
          const Vec2& p = v[e];
          const Vec2& q = v[(e + 1) % 3];
          double dx = q.x - p.x, dy = q.y - p.y;
          double val = dx * (py - p.y) - dy * (px - p.x);
          if (val > 0) continue;
          // y-down: include top edges (horizontal, interior below) and left edges
          bool top_left = (dy == 0) ? (dx > 0) : (dy < 0);
          if (val == 0 && top_left) continue;
          inside = false;
        }
        if (inside) sil.at(x, y) = 1;
      }
    }
  }
  if (sil.foreground_count() == 0) throw NothingVisible("mesh projects to no pixel");
  return sil;
}

// Area-weighted uniform surface sampling, deterministic per seed.
inline PointCloud sample_surface(const TriMesh& mesh, int n, std::uint64_t seed) {
  if (n < 1) throw BadParams("sample_surface: n < 1");
  std::vector<double> cum;
  cum.reserve(mesh.triangles.size());
  double total = 0;
  for (auto tri : mesh.triangles) {
    Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
    Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
    total += 0.5 * e1.cross(e2).norm();
    cum.push_back(total);
  }
  if (total <= 0) throw BadParams("mesh has zero area");

  std::mt19937_64 rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    double pick = uniform01(rng) * total;
    std::size_t t =
        std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin();
    if (t >= cum.size()) t = cum.size() - 1;
    auto tri = mesh.triangles[t];
    double r1 = std::sqrt(uniform01(rng)), r2 = uniform01(rng);
    double u = 1 - r1, v = r1 * (1 - r2), w = r1 * r2;
    cloud.points.push_back(u * mesh.vertices[tri[0]] + v * mesh.vertices[tri[1]] +
                           w * mesh.vertices[tri[2]]);
  }
  return cloud;
}

}  // namespace silfit
