#include "semdepth/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace semdepth {

Intrinsics::Intrinsics(double fx_, double fy_, double cx_, double cy_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw std::invalid_argument("Intrinsics: focal lengths must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw std::invalid_argument("Intrinsics: principal point must be finite");
}

Mat3 Intrinsics::matrix() const {
  Mat3 k = Mat3::Identity();
  k(0, 0) = fx;
  k(1, 1) = fy;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return k;
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  PoseSE3 out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

PoseSE3 inverse(const PoseSE3& t) {
  PoseSE3 out;
  out.rotation = t.rotation.transpose();
  out.translation = -(t.rotation.transpose() * t.translation);
  return out;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

PoseSE3 exp6(const Vec6& param) {
  const Vec3 omega = param.head<3>();
  const double theta = omega.norm();
  PoseSE3 out;
  if (theta < 1e-12) {
    out.rotation = Mat3::Identity() + skew(omega);
    // re-orthonormalize the first-order term
    Eigen::Quaterniond q(out.rotation);
    q.normalize();
    out.rotation = q.toRotationMatrix();
  } else {
    out.rotation = Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
  }
  out.translation = param.tail<3>();
  return out;
}

Vec6 log6(const PoseSE3& t) {
  Eigen::AngleAxisd aa(t.rotation);
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > M_PI) {  // Eigen returns angle in [0, pi]; guard anyway
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  if (angle >= M_PI - 1e-6)
    throw std::domain_error("log6: rotation angle too close to pi");
  Vec6 out;
  out.head<3>() = angle * axis;
  out.tail<3>() = t.translation;
  return out;
}

bool is_rotation(const Mat3& r, double tol) {
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 so3_right_jacobian(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  if (theta < 1e-5) {
    return Mat3::Identity() - 0.5 * w + (1.0 / 6.0) * w * w;
  }
  const double t2 = theta * theta;
  const double a = (1.0 - std::cos(theta)) / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return Mat3::Identity() - a * w + b * w * w;
}

Vec3 pixel_ray(const Intrinsics& k, const Pixel& p) {
  return Vec3((p.u - k.cx) / k.fx, (p.v - k.cy) / k.fy, 1.0);
}

Vec3 backproject(const Intrinsics& k, const Pixel& p, double depth) {
  if (!(depth > 0.0))
    throw std::domain_error("backproject: depth must be positive");
  return depth * pixel_ray(k, p);
}

Projection project(const Intrinsics& k, const Vec3& point) {
  Projection out;
  if (!(point.z() > 0.0) || !point.allFinite()) {
    out.in_front = false;
    return out;
  }
  out.pixel.u = k.fx * point.x() / point.z() + k.cx;
  out.pixel.v = k.fy * point.y() / point.z() + k.cy;
  out.in_front = true;
  return out;
}

Projection project_pixel(const Intrinsics& k, const PoseSE3& t,
                         double depth, const Pixel& p) {
  return project(k, t.apply(backproject(k, p, depth)));
}

}  // namespace semdepth
