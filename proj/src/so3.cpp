#include "sliw/so3.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace sliw {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Mat3 exp_so3(const Vec3& omega) {
  if (!omega.allFinite()) {
    throw std::invalid_argument("exp_so3: non-finite input");
  }
  double theta = omega.norm();
  Vec3 w = omega;
  if (theta > M_PI) {
    // wrap to the principal branch
    double wrapped = std::fmod(theta + M_PI, 2.0 * M_PI) - M_PI;
    if (wrapped <= -M_PI) wrapped += 2.0 * M_PI;
    w *= wrapped / theta;
    theta = std::abs(wrapped);
  }
  const Mat3 k = skew(w);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + s * k + c * k * k;
}

Vec3 log_so3(const Mat3& r) {
  if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(r.determinant() - 1.0) > 1e-6) {
    throw std::invalid_argument("log_so3: input is not a rotation matrix");
  }
  // Quaternion-based extraction: atan2 keeps the angle well-conditioned both
  // near zero and near pi, unlike the acos-of-trace formula.
  Eigen::Quaterniond q(r);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double vec_norm = q.vec().norm();
  const double theta = 2.0 * std::atan2(vec_norm, q.w());
  if (theta < kSmallAngle) {
    return 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  }
  return (theta / vec_norm) * q.vec();
}

Mat3 right_jacobian_so3(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  if (theta < kSmallAngle) {
    return Mat3::Identity() - 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double t2 = theta * theta;
  const double a = (1.0 - std::cos(theta)) / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return Mat3::Identity() - a * k + b * k * k;
}

bool is_rotation(const Mat3& r, double tol) {
  return (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace sliw
