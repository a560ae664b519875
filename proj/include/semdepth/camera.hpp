#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "semdepth/raster.hpp"

namespace semdepth {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

// Pinhole model, zero skew. fx != fy is allowed.
struct Intrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  Intrinsics() = default;
  Intrinsics(double fx_, double fy_, double cx_, double cy_);

  Mat3 matrix() const;
};

// Homogeneous pixel coordinates with w normalized to 1.
struct Pixel {
  double u = 0.0, v = 0.0;
};

// Projection result; behind-camera points are flagged, not thrown:
// they occur legitimately while poses are being optimized.
struct Projection {
  Pixel pixel;
  bool in_front = false;
};

// Rigid transform. param6 convention: first three entries are an
// axis-angle rotation vector, last three the translation (stored
// directly, not the screw translation).
struct PoseSE3 {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);  // a then-applied-after b: a*b
PoseSE3 inverse(const PoseSE3& t);
PoseSE3 exp6(const Vec6& param);
// Throws std::domain_error at rotation angles >= pi - 1e-6.
Vec6 log6(const PoseSE3& t);

// True within tolerance of R'R = I and det R = 1.
bool is_rotation(const Mat3& r, double tol = 1e-9);

// Right Jacobian of the SO(3) exponential: exp((w + d)^) ~= exp(w^) exp((Jr(w) d)^).
Mat3 so3_right_jacobian(const Vec3& omega);

Mat3 skew(const Vec3& v);

// Ray through pixel p at unit depth: ((u-cx)/fx, (v-cy)/fy, 1).
Vec3 pixel_ray(const Intrinsics& k, const Pixel& p);

// Throws std::domain_error for depth <= 0.
Vec3 backproject(const Intrinsics& k, const Pixel& p, double depth);

Projection project(const Intrinsics& k, const Vec3& point);

// Eq-1 style chain: project(K, T * backproject(K, p, depth)).
Projection project_pixel(const Intrinsics& k, const PoseSE3& t,
                         double depth, const Pixel& p);

}  // namespace semdepth
