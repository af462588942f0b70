#pragma once

#include <vector>

#include "sliw/filter.hpp"
#include "sliw/voxel_map.hpp"

namespace sliw {

struct ConstraintParams {
  double global_gate = 1.0;        // voxel association gate [m], 2x resolution
  double local_gate = 0.5;         // point-to-plane residual gate [m]
  int local_knn = 5;               // neighbor cells per point
  double local_search_radius = 3.0;  // [m] cap on the neighbor search
  double planarity_threshold = 0.1;
  double p2p_sigma = 0.05;         // point-to-plane noise [m]
  int min_constraints = 10;        // below this the update is degenerate
};

// Distribution-to-distribution voxel constraints against the global prior
// map: residual = matched mean - transformed scan-voxel mean, noise =
// refined map covariance + rotated scan covariance, weight from the matched
// voxel's semantic label. Output order follows the input order.
std::vector<MapConstraint> global_map_residual(const NavState& x,
                                               const std::vector<ScanVoxel>& scan_voxels,
                                               const VoxelMap& gmap, const SemanticWeights& w,
                                               const ConstraintParams& params = {});

// Scalar point-to-plane constraints against the local map; plane-fit
// rejections and gated residuals are skipped.
std::vector<MapConstraint> local_map_residual(const NavState& x,
                                              const std::vector<Vec3>& scan_points,
                                              const VoxelMap& lmap,
                                              const ConstraintParams& params = {});

// Serial reference implementations, kept for kernel equivalence tests.
std::vector<MapConstraint> global_map_residual_serial(const NavState& x,
                                                      const std::vector<ScanVoxel>& scan_voxels,
                                                      const VoxelMap& gmap,
                                                      const SemanticWeights& w,
                                                      const ConstraintParams& params = {});
std::vector<MapConstraint> local_map_residual_serial(const NavState& x,
                                                     const std::vector<Vec3>& scan_points,
                                                     const VoxelMap& lmap,
                                                     const ConstraintParams& params = {});

struct MapUpdateParams {
  int iters_max = 5;
  double convergence_norm = 1e-4;  // mixed translation/rotation correction norm
  ConstraintParams constraints;
};

// Iterated update: constraints are re-derived at each linearization point,
// global and local blocks stacked jointly, gain solved in information form.
// Covariance is updated once, at the final linearization.
UpdateFlags map_update(FilterState& fs, const std::vector<ScanVoxel>& scan_voxels,
                       const std::vector<Vec3>& scan_points, const VoxelMap* gmap,
                       const VoxelMap* lmap, const SemanticWeights& w,
                       const MapUpdateParams& params = {});

}  // namespace sliw
