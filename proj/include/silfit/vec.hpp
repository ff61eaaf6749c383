#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace silfit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateFrame : Error { using Error::Error; };
struct BehindCamera : Error { using Error::Error; };
struct EmptyForeground : Error { using Error::Error; };
struct EmptyBackground : Error { using Error::Error; };
struct InconsistentView : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct DegenerateCloud : Error { using Error::Error; };
struct EmptyCloud : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct BadParams : Error { using Error::Error; };
struct NothingVisible : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct NumericFailure : Error { using Error::Error; };

struct Vec2 {
  double x = 0, y = 0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    if (n < 1e-300) throw DegenerateFrame("cannot normalize near-zero vector");
    return {x / n, y / n, z / n};
  }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3, used for rotations.
struct Mat3 {
  double m[3][3] = {};

  Vec3 row(int r) const { return {m[r][0], m[r][1], m[r][2]}; }
  Vec3 apply(const Vec3& v) const {
    return {row(0).dot(v), row(1).dot(v), row(2).dot(v)};
  }
  Mat3 transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t.m[r][c] = m[c][r];
    return t;
  }
};

// 2x3 Jacobian block (pixels per world unit).
struct Mat23 {
  double m[2][3] = {};

  Vec2 apply(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z};
  }
  // J^T g, pulls an image-space gradient back to world space.
  Vec3 apply_transposed(const Vec2& g) const {
    return {m[0][0] * g.x + m[1][0] * g.y,
            m[0][1] * g.x + m[1][1] * g.y,
            m[0][2] * g.x + m[1][2] * g.y};
  }
};

inline Mat23 compose(const Mat23& j, const Mat3& r) {
  Mat23 out;
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 3; ++c)
      out.m[a][c] = j.m[a][0] * r.m[0][c] + j.m[a][1] * r.m[1][c] + j.m[a][2] * r.m[2][c];
  return out;
}

// Unit quaternion, scalar-first.
struct Quat {
  double w = 1, x = 0, y = 0, z = 0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const {
    double n = norm();
    return {w / n, x / n, y / n, z / n};
  }

  Mat3 to_matrix() const {
    Mat3 r;
    r.m[0][0] = 1 - 2 * (y * y + z * z);
    r.m[0][1] = 2 * (x * y - w * z);
    r.m[0][2] = 2 * (x * z + w * y);
    r.m[1][0] = 2 * (x * y + w * z);
    r.m[1][1] = 1 - 2 * (x * x + z * z);
    r.m[1][2] = 2 * (y * z - w * x);
    r.m[2][0] = 2 * (x * z - w * y);
    r.m[2][1] = 2 * (y * z + w * x);
    r.m[2][2] = 1 - 2 * (x * x + y * y);
    return r;
  }

  Vec3 rotate(const Vec3& v) const { return to_matrix().apply(v); }

  // Shepperd's method, branch on the largest diagonal term.
  static Quat from_matrix(const Mat3& r) {
    Quat q;
    double tr = r.m[0][0] + r.m[1][1] + r.m[2][2];
    if (tr > 0) {
      double s = std::sqrt(tr + 1.0) * 2;
      q.w = 0.25 * s;
      q.x = (r.m[2][1] - r.m[1][2]) / s;
      q.y = (r.m[0][2] - r.m[2][0]) / s;
      q.z = (r.m[1][0] - r.m[0][1]) / s;
    } else if (r.m[0][0] > r.m[1][1] && r.m[0][0] > r.m[2][2]) {
      double s = std::sqrt(1.0 + r.m[0][0] - r.m[1][1] - r.m[2][2]) * 2;
      q.w = (r.m[2][1] - r.m[1][2]) / s;
      q.x = 0.25 * s;
      q.y = (r.m[0][1] + r.m[1][0]) / s;
      q.z = (r.m[0][2] + r.m[2][0]) / s;
    } else if (r.m[1][1] > r.m[2][2]) {
      double s = std::sqrt(1.0 + r.m[1][1] - r.m[0][0] - r.m[2][2]) * 2;
      q.w = (r.m[0][2] - r.m[2][0]) / s;
      q.x = (r.m[0][1] + r.m[1][0]) / s;
      q.y = 0.25 * s;
      q.z = (r.m[1][2] + r.m[2][1]) / s;
    } else {
      double s = std::sqrt(1.0 + r.m[2][2] - r.m[0][0] - r.m[1][1]) * 2;
      q.w = (r.m[1][0] - r.m[0][1]) / s;
      q.x = (r.m[0][2] + r.m[2][0]) / s;
      q.y = (r.m[1][2] + r.m[2][1]) / s;
      q.z = 0.25 * s;
    }
    return q.normalized();
  }
};

}  // namespace silfit
