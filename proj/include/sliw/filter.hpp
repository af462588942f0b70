#pragma once

#include <vector>

#include <Eigen/Core>

#include "sliw/nav_state.hpp"
#include "sliw/voxel_map.hpp"

namespace sliw {

using CovMatrix = Eigen::Matrix<double, kErrorDim, kErrorDim>;

struct FilterState {
  NavState nav;
  CovMatrix P = CovMatrix::Identity();
  double timestamp = 0.0;
};

// Continuous noise densities (per sqrt(s)). sigma_a / sigma_w double as the
// white measurement noise of the IMU correction and as the random-walk
// densities driving the estimated a_B / w_B blocks.
struct ProcessNoise {
  double sigma_a = 0.1;      // [m/s^2]
  double sigma_w = 0.01;     // [rad/s]
  double sigma_ba = 1e-4;    // [m/s^2 / sqrt(s)]
  double sigma_bw = 1e-5;    // [rad/s / sqrt(s)]
  double sigma_S = 1e-3;     // scale pseudo random walk [1/sqrt(s)]
};

struct SemanticWeights {
  double w_cylinder = 2.0;
  double w_plane = 1.5;
  double w_other = 1.0;
};

double semantic_weight(SemanticLabel label, const SemanticWeights& w);

// One stacked measurement row-block: residual r with Jacobian H = dr/d(dx),
// weight folded into the information matrix as w^2 * R^-1.
struct MapConstraint {
  int dim = 3;  // 1 (point-to-plane) or 3 (voxel GICP)
  Vec3 residual = Vec3::Zero();
  Eigen::Matrix<double, 3, kErrorDim> jacobian = Eigen::Matrix<double, 3, kErrorDim>::Zero();
  double weight = 1.0;
  Mat3 noise = Mat3::Identity();
};

// Rates of the transition model; dt carries the half-step position term so
// that box_plus(x, dt * transition_f(x, dt)) equals the closed-form
// constant-acceleration propagation.
ErrorVector transition_f(const NavState& x, double dt = 0.0);

// Nominal-state propagation plus covariance propagation with analytic
// Jacobians. Steps larger than 0.1 s are split internally.
void predict(FilterState& fs, double dt, const ProcessNoise& q);

// Exposed for Jacobian testing: single-step transition matrices.
void transition_jacobians(const NavState& x, double dt,
                          CovMatrix& F_x, Eigen::Matrix<double, kErrorDim, 15>& F_w);

struct GainSolveResult {
  ErrorVector correction = ErrorVector::Zero();
  CovMatrix posterior = CovMatrix::Zero();
};

// Information-form solve: correction = -(H^T R^-1 H + P^-1)^-1
// (H^T R^-1 r + P^-1 * prior_mismatch); posterior = (H^T R^-1 H + P^-1)^-1.
// Weights enter as w^2 scaling of R^-1. Throws on a singular system.
GainSolveResult iekf_gain_solve(const CovMatrix& P, const std::vector<MapConstraint>& constraints,
                                const ErrorVector& prior_mismatch = ErrorVector::Zero());

struct UpdateFlags {
  bool applied = false;
  bool rejected_nonfinite = false;
  bool degenerate = false;
  int iterations = 0;
  int constraint_count = 0;
};

// IMU residuals per the body-frame measurement model: single-shot 6-dim update.
UpdateFlags imu_update(FilterState& fs, const Vec3& omega_m, const Vec3& accel_m,
                       const ProcessNoise& noise);

// Exposed for Jacobian testing.
void imu_residual(const NavState& x, const Vec3& omega_m, const Vec3& accel_m,
                  Eigen::Matrix<double, 6, 1>& r, Eigen::Matrix<double, 6, kErrorDim>& H);

struct WheelNoise {
  double sigma_v = 0.05;   // [m/s]
  double sigma_w = 0.005;  // [rad/s]
};

// Wheel velocity residual with per-axis scale and lever-arm compensation,
// plus the rate residual; single-shot 6-dim update.
UpdateFlags wheel_update(FilterState& fs, const Vec3& v_m, const Vec3& omega_m,
                         const WheelNoise& noise);

void wheel_residual(const NavState& x, const Vec3& v_m, const Vec3& omega_m,
                    Eigen::Matrix<double, 6, 1>& r, Eigen::Matrix<double, 6, kErrorDim>& H);

}  // namespace sliw
