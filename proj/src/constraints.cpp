#include "sliw/constraints.hpp"

#include <cmath>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sliw {

namespace {

// One scan voxel against the global map; nullopt when unmatched or gated.
std::optional<MapConstraint> one_global_constraint(const NavState& x, const ScanVoxel& sv,
                                                   const VoxelMap& gmap,
                                                   const SemanticWeights& w,
                                                   const ConstraintParams& params) {
  const Mat3 r_total = x.R_WI * x.R_IL;
  const Vec3 y = x.R_WI * (x.R_IL * sv.mean + x.p_IL) + x.p_WI;
  const auto nn = gmap.knn_search(y, 1, kMinPointsForCov, params.global_gate);
  if (nn.empty() || nn[0].distance > params.global_gate) return std::nullopt;
  const VoxelCell* cell = gmap.find(nn[0].key);
  if (cell == nullptr || !cell->refined) return std::nullopt;

  MapConstraint c;
  c.dim = 3;
  c.residual = cell->mean - y;
  c.noise = cell->refined_cov + r_total * sv.covariance * r_total.transpose();
  c.weight = semantic_weight(cell->label, w);

  const Vec3 s = x.R_IL * sv.mean + x.p_IL;  // scan voxel in IMU frame
  c.jacobian.setZero();
  c.jacobian.block<3, 3>(0, blk::kPos) = -Mat3::Identity();
  c.jacobian.block<3, 3>(0, blk::kRot) = x.R_WI * skew(s);
  c.jacobian.block<3, 3>(0, blk::kRotIL) = x.R_WI * x.R_IL * skew(sv.mean);
  c.jacobian.block<3, 3>(0, blk::kPosIL) = -x.R_WI;
  return c;
}

std::optional<MapConstraint> one_local_constraint(const NavState& x, const Vec3& p,
                                                  const VoxelMap& lmap,
                                                  const ConstraintParams& params) {
  const Vec3 y = x.R_WI * (x.R_IL * p + x.p_IL) + x.p_WI;
  const auto nn = lmap.knn_search(y, params.local_knn, 1, params.local_search_radius);
  if (static_cast<int>(nn.size()) < 4) return std::nullopt;
  std::vector<Vec3> means;
  means.reserve(nn.size());
  for (const auto& n : nn) means.push_back(lmap.find(n.key)->mean);
  const PlaneFitResult fit = fit_plane(means, params.planarity_threshold);
  if (!fit.ok()) return std::nullopt;

  const double r = fit.plane.normal.dot(y - fit.plane.anchor);
  if (std::abs(r) > params.local_gate) return std::nullopt;

  MapConstraint c;
  c.dim = 1;
  c.residual = Vec3(r, 0, 0);
  c.noise = Mat3::Identity() * params.p2p_sigma * params.p2p_sigma;
  c.weight = 1.0;

  const Vec3 s = x.R_IL * p + x.p_IL;
  const Eigen::RowVector3d u = fit.plane.normal.transpose();
  c.jacobian.setZero();
  c.jacobian.block<1, 3>(0, blk::kPos) = u;
  c.jacobian.block<1, 3>(0, blk::kRot) = -u * x.R_WI * skew(s);
  c.jacobian.block<1, 3>(0, blk::kRotIL) = -u * x.R_WI * x.R_IL * skew(p);
  c.jacobian.block<1, 3>(0, blk::kPosIL) = u * x.R_WI;
  return c;
}

// Compact an index-ordered optional array; keeps input order so the
// parallel and serial paths agree bit for bit.
std::vector<MapConstraint> compact(std::vector<std::optional<MapConstraint>>&& slots) {
  std::vector<MapConstraint> out;
  out.reserve(slots.size());
  for (auto& s : slots) {
    if (s.has_value()) out.push_back(std::move(*s));
  }
  return out;
}

}  // namespace

std::vector<MapConstraint> global_map_residual_serial(const NavState& x,
                                                      const std::vector<ScanVoxel>& scan_voxels,
                                                      const VoxelMap& gmap,
                                                      const SemanticWeights& w,
                                                      const ConstraintParams& params) {
  std::vector<std::optional<MapConstraint>> slots(scan_voxels.size());
  for (size_t i = 0; i < scan_voxels.size(); ++i) {
    slots[i] = one_global_constraint(x, scan_voxels[i], gmap, w, params);
  }
  return compact(std::move(slots));
}

std::vector<MapConstraint> global_map_residual(const NavState& x,
                                               const std::vector<ScanVoxel>& scan_voxels,
                                               const VoxelMap& gmap, const SemanticWeights& w,
                                               const ConstraintParams& params) {
  std::vector<std::optional<MapConstraint>> slots(scan_voxels.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long i = 0; i < static_cast<long>(scan_voxels.size()); ++i) {
    slots[i] = one_global_constraint(x, scan_voxels[i], gmap, w, params);
  }
  return compact(std::move(slots));
}

std::vector<MapConstraint> local_map_residual_serial(const NavState& x,
                                                     const std::vector<Vec3>& scan_points,
                                                     const VoxelMap& lmap,
                                                     const ConstraintParams& params) {
  std::vector<std::optional<MapConstraint>> slots(scan_points.size());
  for (size_t i = 0; i < scan_points.size(); ++i) {
    slots[i] = one_local_constraint(x, scan_points[i], lmap, params);
  }
  return compact(std::move(slots));
}

std::vector<MapConstraint> local_map_residual(const NavState& x,
                                              const std::vector<Vec3>& scan_points,
                                              const VoxelMap& lmap,
                                              const ConstraintParams& params) {
  std::vector<std::optional<MapConstraint>> slots(scan_points.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long i = 0; i < static_cast<long>(scan_points.size()); ++i) {
    slots[i] = one_local_constraint(x, scan_points[i], lmap, params);
  }
  return compact(std::move(slots));
}

UpdateFlags map_update(FilterState& fs, const std::vector<ScanVoxel>& scan_voxels,
                       const std::vector<Vec3>& scan_points, const VoxelMap* gmap,
                       const VoxelMap* lmap, const SemanticWeights& w,
                       const MapUpdateParams& params) {
  UpdateFlags flags;
  const NavState prior = fs.nav;
  NavState x = fs.nav;
  GainSolveResult sol;
  std::vector<MapConstraint> constraints;

  for (int iter = 0; iter < params.iters_max; ++iter) {
    constraints.clear();
    if (gmap != nullptr && !gmap->empty()) {
      constraints = global_map_residual(x, scan_voxels, *gmap, w, params.constraints);
    }
    if (lmap != nullptr && !lmap->empty()) {
      auto local = local_map_residual(x, scan_points, *lmap, params.constraints);
      constraints.insert(constraints.end(), local.begin(), local.end());
    }
    flags.constraint_count = static_cast<int>(constraints.size());
    if (flags.constraint_count < params.constraints.min_constraints) {
      flags.degenerate = true;
      return flags;  // update skipped, state untouched
    }

    const ErrorVector mismatch = box_minus(x, prior);
    sol = iekf_gain_solve(fs.P, constraints, mismatch);
    x = box_plus(x, sol.correction);
    flags.iterations = iter + 1;
    if (sol.correction.norm() < params.convergence_norm) break;
  }

  fs.nav = x;
  fs.P = sol.posterior;
  flags.applied = true;
  return flags;
}

}  // namespace sliw
