#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "sliw/so3.hpp"

namespace sliw {

struct VoxelKey {
  int32_t x = 0, y = 0, z = 0;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  size_t operator()(const VoxelKey& k) const {
    // large primes per axis, as in common spatial-hash maps
    return static_cast<size_t>(k.x) * 73856093u ^
           static_cast<size_t>(k.y) * 19349669u ^
           static_cast<size_t>(k.z) * 83492791u;
  }
};

enum class SemanticLabel : uint8_t { kOther = 0, kCylinder = 1, kPlane = 2 };

const char* to_string(SemanticLabel label);

struct ClassifyParams {
  double theta_thc = 15.0 * M_PI / 180.0;  // cylinder axis vs z
  double theta_thp = 15.0 * M_PI / 180.0;  // plane normal vs z
  double ratio_big = 9.0;                  // "much greater" singular-value ratio
  double ratio_close = 3.0;                // "approximately equal" ratio
};

// Per-voxel Gaussian accumulated by Welford/Chan streaming updates.
struct VoxelCell {
  uint32_t count = 0;
  Vec3 mean = Vec3::Zero();
  Mat3 m2 = Mat3::Zero();  // sum of outer products of deviations
  SemanticLabel label = SemanticLabel::kOther;
  bool classified = false;
  Mat3 refined_cov = Mat3::Zero();
  bool refined = false;
  // set on deserialization so save/load round-trips are bit-exact
  bool has_cov_cache = false;
  Mat3 cov_cache = Mat3::Zero();

  void add(const Vec3& p);
  void merge(const VoxelCell& other);
  // Sample covariance m2/(count-1); valid once count >= kMinPointsForCov.
  Mat3 covariance() const;
};

constexpr uint32_t kMinPointsForCov = 5;

enum class MapKind : uint8_t { kGlobalPrior = 0, kLocalDynamic = 1 };

struct ScanVoxel {
  VoxelKey key;
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
  uint32_t count = 0;
};

struct FittedPlane {
  Vec3 normal = Vec3::UnitZ();
  Vec3 anchor = Vec3::Zero();
  double planarity = 0.0;  // lambda_min / lambda_mid
};

enum class PlaneFitStatus { kOk, kInsufficientPoints, kDegenerate, kNotPlanar };

struct PlaneFitResult {
  PlaneFitStatus status = PlaneFitStatus::kOk;
  FittedPlane plane;
  bool ok() const { return status == PlaneFitStatus::kOk; }
};

struct KnnResult {
  VoxelKey key;
  double distance = 0.0;  // query to cell mean
};

struct KeyframeState {
  bool has_last = false;
  Mat3 last_R = Mat3::Identity();
  Vec3 last_p = Vec3::Zero();
};

struct LocalMapParams {
  double keyframe_translation = 1.0;            // [m]
  double keyframe_rotation = 10.0 * M_PI / 180.0;
  double sliding_radius = 150.0;                // [m]
};

class VoxelMap {
 public:
  explicit VoxelMap(double resolution = 0.5, MapKind kind = MapKind::kGlobalPrior);

  double resolution() const { return resolution_; }
  MapKind kind() const { return kind_; }
  size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  VoxelKey key_of(const Vec3& p) const;

  void insert_points(const std::vector<Vec3>& points);

  const VoxelCell* find(const VoxelKey& key) const;
  const std::unordered_map<VoxelKey, VoxelCell, VoxelKeyHash>& cells() const { return cells_; }

  // Classify + refine every cell with count >= kMinPointsForCov; cells below
  // the threshold are dropped.
  void finalize(const ClassifyParams& params);

  // Up to k cells with count >= min_count, ascending distance from query to
  // cell mean. Expanding-shell search over the key lattice; terminates when
  // the shell's minimum possible distance exceeds the current k-th best, or
  // exceeds max_distance when the caller gates its matches anyway.
  std::vector<KnnResult> knn_search(
      const Vec3& query, int k, uint32_t min_count = 1,
      double max_distance = std::numeric_limits<double>::infinity()) const;

  // Keyframe-gated insertion of a posed scan plus distance-based eviction.
  // Returns true when the scan was admitted.
  bool local_map_update(const std::vector<Vec3>& scan, const Mat3& R, const Vec3& p,
                        KeyframeState& kf, const LocalMapParams& params = {});

  void save(const std::string& path) const;
  static VoxelMap load(const std::string& path);

 private:
  void touch_bounds(const VoxelKey& key);

  double resolution_;
  MapKind kind_;
  std::unordered_map<VoxelKey, VoxelCell, VoxelKeyHash> cells_;
  // key-space bounding box over every key ever inserted (a superset after
  // erasures, which only loosens the knn termination radius)
  bool has_bounds_ = false;
  int32_t bounds_lo_[3] = {0, 0, 0};
  int32_t bounds_hi_[3] = {0, 0, 0};
};

SemanticLabel classify_voxel(const VoxelCell& cell, const ClassifyParams& params);

// Alg.-style covariance refinement: cylinders get their singular values
// floored at 1e-3; plane/other cells are recomposed with diag(1, 1, 1e-3).
VoxelCell refine_covariance(const VoxelCell& cell);

std::vector<ScanVoxel> voxelize_scan(const std::vector<Vec3>& points, double resolution,
                                     double fallback_sigma = 0.05);

PlaneFitResult fit_plane(const std::vector<Vec3>& neighbors, double planarity_threshold = 0.1);

}  // namespace sliw
