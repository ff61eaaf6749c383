#pragma once

#include <cstdint>
#include <vector>

#include "silfit/vec.hpp"

namespace silfit {

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
};

// Rigid world->camera transform plus pinhole intrinsics for one view.
// Camera frame: x right, y down, z forward (optical axis).
struct CameraPose {
  Quat rotation;        // world -> camera
  Vec3 translation;     // camera-frame offset, p_cam = R p_world + t
  double focal = 1.0;   // pixels
  Vec2 principal_point; // pixels
  int width = 0, height = 0;
  bool orthographic = false;  // debug mode: parallel projection, focal acts as scale

  Vec3 to_camera(const Vec3& p) const {
    return rotation.rotate(p) + translation;
  }
};

struct Projection2 {
  Vec2 uv;          // continuous pixel coordinates; pixel (r,c) center is (c+0.5, r+0.5)
  double depth = 0; // camera-frame z, world units
};

inline constexpr double kZNear = 1e-4;

// Builds a pose whose optical axis passes through `target`.
// Principal point defaults to the image center.
inline CameraPose look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up,
                                 double focal, int width, int height) {
  Vec3 view = target - eye;
  if (view.norm() <= 1e-9) throw DegenerateFrame("eye and target coincide");
  Vec3 forward = view.normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() <= 1e-9 * up.norm()) throw DegenerateFrame("up parallel to view direction");
  right = right.normalized();
  Vec3 down = forward.cross(right).normalized();

  Mat3 r;
  r.m[0][0] = right.x;   r.m[0][1] = right.y;   r.m[0][2] = right.z;
  r.m[1][0] = down.x;    r.m[1][1] = down.y;    r.m[1][2] = down.z;
  r.m[2][0] = forward.x; r.m[2][1] = forward.y; r.m[2][2] = forward.z;

  CameraPose pose;
  pose.rotation = Quat::from_matrix(r);
  pose.translation = -r.apply(eye);
  pose.focal = focal;
  pose.principal_point = {width / 2.0, height / 2.0};
  pose.width = width;
  pose.height = height;
  return pose;
}

inline bool try_project(const CameraPose& pose, const Vec3& point, Projection2& out) {
  Vec3 pc = pose.to_camera(point);
  if (pose.orthographic) {
    out.uv = pose.principal_point + Vec2{pose.focal * pc.x, pose.focal * pc.y};
    out.depth = pc.z;
    return true;
  }
  if (pc.z <= kZNear) return false;
  out.uv = pose.principal_point + Vec2{pose.focal * pc.x / pc.z, pose.focal * pc.y / pc.z};
  out.depth = pc.z;
  return true;
}

inline Projection2 project_point(const CameraPose& pose, const Vec3& point) {
  Projection2 p;
  if (!try_project(pose, point, p)) throw BehindCamera("point at or behind z_near");
  return p;
}

// d uv / d point_world, 2x3 in pixels per world unit.
inline Mat23 projection_jacobian(const CameraPose& pose, const Vec3& point) {
  Vec3 pc = pose.to_camera(point);
  Mat23 jc;
  if (pose.orthographic) {
    jc.m[0][0] = pose.focal;
    jc.m[1][1] = pose.focal;
  } else {
    if (pc.z <= kZNear) throw BehindCamera("point at or behind z_near");
    double f = pose.focal, z = pc.z;
    jc.m[0][0] = f / z;
    jc.m[0][2] = -f * pc.x / (z * z);
    jc.m[1][1] = f / z;
    jc.m[1][2] = -f * pc.y / (z * z);
  }
  return compose(jc, pose.rotation.to_matrix());
}

struct ProjectedCloud {
  std::vector<Projection2> proj;
  std::vector<std::uint8_t> valid;  // index-aligned with the cloud
};

inline ProjectedCloud project_cloud(const CameraPose& pose, const PointCloud& cloud) {
  ProjectedCloud out;
  out.proj.resize(cloud.size());
  out.valid.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out.valid[i] = try_project(pose, cloud.points[i], out.proj[i]) ? 1 : 0;
  return out;
}

}  // namespace silfit
