#include "sliw/filter.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace sliw {

namespace {
constexpr double kMaxStep = 0.1;  // [s]

void symmetrize(CovMatrix& P) { P = 0.5 * (P + P.transpose()).eval(); }
}  // namespace

double semantic_weight(SemanticLabel label, const SemanticWeights& w) {
  switch (label) {
    case SemanticLabel::kCylinder: return w.w_cylinder;
    case SemanticLabel::kPlane: return w.w_plane;
    default: return w.w_other;
  }
}

ErrorVector transition_f(const NavState& x, double dt) {
  ErrorVector f = ErrorVector::Zero();
  const Vec3 accel_w = x.R_WI * (x.R_IB * x.a_B) + x.g_W;
  f.segment<3>(blk::kPos) = x.v_WI + 0.5 * accel_w * dt;
  f.segment<3>(blk::kVel) = accel_w;
  f.segment<3>(blk::kRot) = x.R_IB * x.w_B;
  // bias and body accel/rate blocks are noise-driven; trailing blocks zero
  return f;
}

void transition_jacobians(const NavState& x, double dt,
                          CovMatrix& F_x, Eigen::Matrix<double, kErrorDim, 15>& F_w) {
  F_x.setIdentity();
  F_w.setZero();

  const Mat3 R = x.R_WI;
  const Vec3 s_acc = x.R_IB * x.a_B;           // specific force in IMU frame
  const Vec3 u = x.R_IB * x.w_B;               // rotation increment rate
  const Mat3 d_acc_dtheta = -R * skew(s_acc);  // world accel wrt rotation error
  const Mat3 d_acc_da = R * x.R_IB;
  const Mat3 d_acc_dphi = -R * x.R_IB * skew(x.a_B);

  const double h = 0.5 * dt * dt;
  F_x.block<3, 3>(blk::kPos, blk::kVel) = dt * Mat3::Identity();
  F_x.block<3, 3>(blk::kPos, blk::kRot) = h * d_acc_dtheta;
  F_x.block<3, 3>(blk::kPos, blk::kAccB) = h * d_acc_da;
  F_x.block<3, 3>(blk::kPos, blk::kGrav) = h * Mat3::Identity();
  F_x.block<3, 3>(blk::kPos, blk::kRotIB) = h * d_acc_dphi;

  F_x.block<3, 3>(blk::kVel, blk::kRot) = dt * d_acc_dtheta;
  F_x.block<3, 3>(blk::kVel, blk::kAccB) = dt * d_acc_da;
  F_x.block<3, 3>(blk::kVel, blk::kGrav) = dt * Mat3::Identity();
  F_x.block<3, 3>(blk::kVel, blk::kRotIB) = dt * d_acc_dphi;

  const Mat3 jr = right_jacobian_so3(u * dt);
  F_x.block<3, 3>(blk::kRot, blk::kRot) = exp_so3(u * dt).transpose();
  F_x.block<3, 3>(blk::kRot, blk::kRateB) = jr * dt * x.R_IB;
  F_x.block<3, 3>(blk::kRot, blk::kRotIB) = -jr * dt * x.R_IB * skew(x.w_B);

  // noise order: n_a, n_w, n_ba, n_bw, n_S
  F_w.block<3, 3>(blk::kAccB, 0) = dt * Mat3::Identity();
  F_w.block<3, 3>(blk::kRateB, 3) = dt * Mat3::Identity();
  F_w.block<3, 3>(blk::kBa, 6) = dt * Mat3::Identity();
  F_w.block<3, 3>(blk::kBw, 9) = dt * Mat3::Identity();
  F_w.block<3, 3>(blk::kScale, 12) = dt * Mat3::Identity();
}

void predict(FilterState& fs, double dt, const ProcessNoise& q) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("predict: dt must be positive");
  }
  int steps = static_cast<int>(std::ceil(dt / kMaxStep));
  const double step = dt / steps;

  Eigen::Matrix<double, 15, 1> q_diag;
  q_diag << Vec3::Constant(q.sigma_a * q.sigma_a),
      Vec3::Constant(q.sigma_w * q.sigma_w),
      Vec3::Constant(q.sigma_ba * q.sigma_ba),
      Vec3::Constant(q.sigma_bw * q.sigma_bw),
      Vec3::Constant(q.sigma_S * q.sigma_S);

  for (int i = 0; i < steps; ++i) {
    CovMatrix F_x;
    Eigen::Matrix<double, kErrorDim, 15> F_w;
    transition_jacobians(fs.nav, step, F_x, F_w);
    fs.nav = box_plus(fs.nav, step * transition_f(fs.nav, step));
    // density convention: F_w Q F_w^T with Q = diag(sigma^2)/dt gives
    // sigma^2 * dt random-walk growth
    fs.P = F_x * fs.P * F_x.transpose() +
           F_w * (q_diag / step).asDiagonal() * F_w.transpose();
    symmetrize(fs.P);
  }
  fs.timestamp += dt;
}

GainSolveResult iekf_gain_solve(const CovMatrix& P, const std::vector<MapConstraint>& constraints,
                                const ErrorVector& prior_mismatch) {
  if (constraints.empty()) {
    throw std::invalid_argument("iekf_gain_solve: no constraints");
  }
  Eigen::LDLT<CovMatrix> p_ldlt(P);
  if (p_ldlt.info() != Eigen::Success) {
    throw std::runtime_error("iekf_gain_solve: prior covariance not factorizable");
  }
  const CovMatrix p_inv = p_ldlt.solve(CovMatrix::Identity());

  CovMatrix info = p_inv;
  ErrorVector rhs = p_inv * prior_mismatch;
  for (const MapConstraint& c : constraints) {
    const double w2 = c.weight * c.weight;
    if (c.dim == 1) {
      const double r_inv = w2 / c.noise(0, 0);
      const auto h = c.jacobian.row(0);
      info.noalias() += h.transpose() * r_inv * h;
      rhs.noalias() += h.transpose() * (r_inv * c.residual(0));
    } else {
      const Mat3 r_inv = w2 * c.noise.inverse();
      const auto h = c.jacobian;
      info.noalias() += h.transpose() * r_inv * h;
      rhs.noalias() += h.transpose() * (r_inv * c.residual);
    }
  }

  Eigen::LDLT<CovMatrix> info_ldlt(info);
  if (info_ldlt.info() != Eigen::Success || info_ldlt.isNegative()) {
    throw std::runtime_error("iekf_gain_solve: singular information matrix");
  }
  GainSolveResult out;
  out.correction = -info_ldlt.solve(rhs);
  out.posterior = info_ldlt.solve(CovMatrix::Identity());
  out.posterior = 0.5 * (out.posterior + out.posterior.transpose()).eval();
  if (!out.correction.allFinite()) {
    throw std::runtime_error("iekf_gain_solve: non-finite correction");
  }
  return out;
}

void imu_residual(const NavState& x, const Vec3& omega_m, const Vec3& accel_m,
                  Eigen::Matrix<double, 6, 1>& r, Eigen::Matrix<double, 6, kErrorDim>& H) {
  const Mat3 rib_t = x.R_IB.transpose();
  const Vec3 w_body = rib_t * omega_m;
  const Vec3 a_body = rib_t * accel_m;
  r.head<3>() = w_body - x.b_w - x.w_B;
  r.tail<3>() = a_body - x.b_a - x.a_B;

  H.setZero();
  H.block<3, 3>(0, blk::kBw) = -Mat3::Identity();
  H.block<3, 3>(0, blk::kRateB) = -Mat3::Identity();
  H.block<3, 3>(0, blk::kRotIB) = skew(w_body);
  H.block<3, 3>(3, blk::kBa) = -Mat3::Identity();
  H.block<3, 3>(3, blk::kAccB) = -Mat3::Identity();
  H.block<3, 3>(3, blk::kRotIB) = skew(a_body);
}

UpdateFlags imu_update(FilterState& fs, const Vec3& omega_m, const Vec3& accel_m,
                       const ProcessNoise& noise) {
  UpdateFlags flags;
  if (!omega_m.allFinite() || !accel_m.allFinite()) {
    flags.rejected_nonfinite = true;
    return flags;
  }
  Eigen::Matrix<double, 6, 1> r;
  Eigen::Matrix<double, 6, kErrorDim> H;
  imu_residual(fs.nav, omega_m, accel_m, r, H);

  std::vector<MapConstraint> constraints(2);
  constraints[0].dim = 3;
  constraints[0].residual = r.head<3>();
  constraints[0].jacobian = H.topRows<3>();
  constraints[0].noise = noise.sigma_w * noise.sigma_w * Mat3::Identity();
  constraints[1].dim = 3;
  constraints[1].residual = r.tail<3>();
  constraints[1].jacobian = H.bottomRows<3>();
  constraints[1].noise = noise.sigma_a * noise.sigma_a * Mat3::Identity();

  const GainSolveResult sol = iekf_gain_solve(fs.P, constraints);
  fs.nav = box_plus(fs.nav, sol.correction);
  fs.P = sol.posterior;
  flags.applied = true;
  flags.constraint_count = 2;
  return flags;
}

void wheel_residual(const NavState& x, const Vec3& v_m, const Vec3& omega_m,
                    Eigen::Matrix<double, 6, 1>& r, Eigen::Matrix<double, 6, kErrorDim>& H) {
  const Mat3 R = x.R_WI;
  const Vec3 v_scaled = v_m.cwiseProduct(x.S_v);      // body-frame scaled velocity
  const Vec3 lever = skew(x.R_IB * x.w_B) * x.p_IB;   // velocity of the wheel frame origin
  const Vec3 c = x.R_IB * v_scaled - lever;
  r.head<3>() = R * c - x.v_WI;
  r.tail<3>() = omega_m - x.w_B;

  H.setZero();
  H.block<3, 3>(0, blk::kVel) = -Mat3::Identity();
  H.block<3, 3>(0, blk::kRot) = -R * skew(c);
  H.block<3, 3>(0, blk::kScale) = R * x.R_IB * v_m.asDiagonal();
  H.block<3, 3>(0, blk::kRateB) = R * skew(x.p_IB) * x.R_IB;
  H.block<3, 3>(0, blk::kRotIB) =
      -R * x.R_IB * skew(v_scaled) - R * skew(x.p_IB) * x.R_IB * skew(x.w_B);
  H.block<3, 3>(0, blk::kPosIB) = -R * skew(x.R_IB * x.w_B);
  H.block<3, 3>(3, blk::kRateB) = -Mat3::Identity();
}

UpdateFlags wheel_update(FilterState& fs, const Vec3& v_m, const Vec3& omega_m,
                         const WheelNoise& noise) {
  UpdateFlags flags;
  if (!v_m.allFinite() || !omega_m.allFinite()) {
    flags.rejected_nonfinite = true;
    return flags;
  }
  Eigen::Matrix<double, 6, 1> r;
  Eigen::Matrix<double, 6, kErrorDim> H;
  wheel_residual(fs.nav, v_m, omega_m, r, H);

  std::vector<MapConstraint> constraints(2);
  constraints[0].dim = 3;
  constraints[0].residual = r.head<3>();
  constraints[0].jacobian = H.topRows<3>();
  constraints[0].noise = noise.sigma_v * noise.sigma_v * Mat3::Identity();
  constraints[1].dim = 3;
  constraints[1].residual = r.tail<3>();
  constraints[1].jacobian = H.bottomRows<3>();
  constraints[1].noise = noise.sigma_w * noise.sigma_w * Mat3::Identity();

  const GainSolveResult sol = iekf_gain_solve(fs.P, constraints);
  fs.nav = box_plus(fs.nav, sol.correction);
  fs.P = sol.posterior;
  flags.applied = true;
  flags.constraint_count = 2;
  return flags;
}

}  // namespace sliw
