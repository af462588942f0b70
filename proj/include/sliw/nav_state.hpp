#pragma once

#include <Eigen/Core>

#include "sliw/so3.hpp"

namespace sliw {

// Error-state layout: 13 blocks of 3, in the listing order of the state
// vector. Rotation blocks are right-multiplied tangent increments.
namespace blk {
constexpr int kPos = 0;
constexpr int kVel = 3;
constexpr int kRot = 6;
constexpr int kBa = 9;
constexpr int kBw = 12;
constexpr int kAccB = 15;
constexpr int kRateB = 18;
constexpr int kScale = 21;
constexpr int kGrav = 24;
constexpr int kRotIL = 27;
constexpr int kPosIL = 30;
constexpr int kRotIB = 33;
constexpr int kPosIB = 36;
}  // namespace blk

constexpr int kErrorDim = 39;
using ErrorVector = Eigen::Matrix<double, kErrorDim, 1>;

struct NavState {
  Vec3 p_WI = Vec3::Zero();        // position, world frame [m]
  Vec3 v_WI = Vec3::Zero();        // velocity, world frame [m/s]
  Mat3 R_WI = Mat3::Identity();    // IMU orientation in world
  Vec3 b_a = Vec3::Zero();         // accel bias [m/s^2]
  Vec3 b_w = Vec3::Zero();         // gyro bias [rad/s]
  Vec3 a_B = Vec3::Zero();         // specific force, wheel-odometry frame [m/s^2]
  Vec3 w_B = Vec3::Zero();         // body rate, wheel-odometry frame [rad/s]
  Vec3 S_v = Vec3::Ones();         // per-axis wheel velocity scale
  Vec3 g_W = Vec3(0, 0, -9.81);    // gravity, world frame [m/s^2]
  Mat3 R_IL = Mat3::Identity();    // LiDAR -> IMU rotation
  Vec3 p_IL = Vec3::Zero();        // LiDAR -> IMU translation [m]
  Mat3 R_IB = Mat3::Identity();    // wheel-odometry -> IMU rotation
  Vec3 p_IB = Vec3::Zero();        // wheel-odometry -> IMU translation [m]

  // Soft invariants: rotations orthonormal, S_v in [0.5, 1.5], |g| in
  // [9.0, 10.5]. Not enforced by the manifold operations.
  bool is_valid() const;
};

// Manifold retraction: vector blocks add, rotation blocks multiply on the
// right by exp_so3 of their increment.
NavState box_plus(const NavState& x, const ErrorVector& d);

// Inverse retraction: vector blocks subtract, rotation blocks return
// log_so3(b_rot^T * a_rot).
ErrorVector box_minus(const NavState& a, const NavState& b);

}  // namespace sliw
