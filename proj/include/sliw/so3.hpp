#pragma once

#include <Eigen/Core>

namespace sliw {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Skew-symmetric matrix such that skew(a) * b == a.cross(b).
inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

// Rodrigues exponential. Inputs beyond |omega| = pi are wrapped to the
// principal branch; series expansion below 1e-8 rad.
Mat3 exp_so3(const Vec3& omega);

// Principal logarithm, |result| <= pi. Throws std::invalid_argument when the
// input deviates from orthonormality by more than 1e-6.
Vec3 log_so3(const Mat3& r);

// Right Jacobian of the exponential map.
Mat3 right_jacobian_so3(const Vec3& omega);

// Orthonormality + det(+1) check against the given tolerance.
bool is_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace sliw
