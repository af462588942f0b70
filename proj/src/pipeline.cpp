#include "sliw/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace sliw {

namespace {

struct InterpPose {
  Mat3 R;
  Vec3 p;
  Vec3 v;
};

InterpPose interpolate_truth(const std::vector<PoseLogEntry>& truth, double t) {
  auto it = std::lower_bound(truth.begin(), truth.end(), t,
                             [](const PoseLogEntry& g, double tv) { return g.t < tv; });
  if (it == truth.begin()) it = truth.begin() + 1;
  if (it == truth.end()) it = truth.end() - 1;
  const PoseLogEntry& g1 = *it;
  const PoseLogEntry& g0 = *(it - 1);
  const double u = std::clamp((t - g0.t) / (g1.t - g0.t), 0.0, 1.0);
  InterpPose out;
  out.p = g0.p + u * (g1.p - g0.p);
  out.v = g0.v + u * (g1.v - g0.v);
  out.R = g0.q.slerp(u, g1.q).toRotationMatrix();
  return out;
}

}  // namespace

VoxelMap build_prior_map(const std::vector<MeasurementRecord>& records,
                         const std::vector<PoseLogEntry>& truth, const FilterConfig& cfg) {
  VoxelMap map(cfg.voxel_resolution, MapKind::kGlobalPrior);
  std::vector<Vec3> world_points;
  for (const MeasurementRecord& rec : records) {
    if (rec.kind != RecordKind::kLidar) continue;
    const InterpPose pose = interpolate_truth(truth, rec.t);
    world_points.clear();
    world_points.reserve(rec.points.size());
    for (const LidarPoint& pt : rec.points) {
      world_points.push_back(pose.R * pt.p + pose.p);
    }
    map.insert_points(world_points);
  }
  map.finalize(cfg.classify);
  return map;
}

std::map<std::string, size_t> label_histogram(const VoxelMap& map) {
  std::map<std::string, size_t> hist{{"cylinder", 0}, {"plane", 0}, {"other", 0}};
  for (const auto& [key, cell] : map.cells()) {
    hist[to_string(cell.label)] += 1;
  }
  return hist;
}

RunResult run_filter(const std::vector<MeasurementRecord>& records,
                     const std::vector<PoseLogEntry>& truth, const VoxelMap& prior_map,
                     const ExperimentConfig& cfg) {
  if (records.empty()) throw std::invalid_argument("run_filter: empty dataset");
  if (truth.empty()) throw std::invalid_argument("run_filter: empty ground truth");
  if (records.front().t + 1e-9 < truth.front().t ||
      records.back().t > truth.back().t + 1.0) {
    throw std::runtime_error("run_filter: dataset span not covered by ground truth");
  }

  const FilterConfig& fc = cfg.filter;
  ProcessNoise process = fc.process;
  InitCovarianceConfig init_cov = fc.init_cov;
  if (!cfg.adaptive_scale) {
    // freeze the wheel scale at its initial value
    process.sigma_S = 1e-12;
    init_cov.scale = 1e-12;
  }
  SemanticWeights weights = fc.weights;
  if (!cfg.semantic_weighting) {
    weights = SemanticWeights{1.0, 1.0, 1.0};
  }

  FilterState fs;
  fs.timestamp = truth.front().t;
  const InterpPose init = interpolate_truth(truth, fs.timestamp);
  fs.nav.p_WI = init.p;
  fs.nav.v_WI = init.v;
  fs.nav.R_WI = init.R;
  fs.nav.a_B = -fs.nav.R_WI.transpose() * fs.nav.g_W;  // rest specific force
  fs.P = init_cov.to_matrix();

  VoxelMap local_map(fc.voxel_resolution, MapKind::kLocalDynamic);
  KeyframeState keyframe;

  RunResult out;
  Vec3 last_map_pos = fs.nav.p_WI;

  for (const MeasurementRecord& rec : records) {
    const double dt = rec.t - fs.timestamp;
    if (dt > 1e-9) {
      predict(fs, dt, process);
    }
    if (!fs.nav.p_WI.allFinite()) {
      throw DivergenceError("run_filter: non-finite state", rec.t);
    }

    switch (rec.kind) {
      case RecordKind::kImu:
        imu_update(fs, rec.omega, rec.accel_or_vel, process);
        break;
      case RecordKind::kWheel:
        wheel_update(fs, rec.accel_or_vel, rec.omega, fc.wheel);
        break;
      case RecordKind::kLidar: {
        std::vector<Vec3> scan;
        scan.reserve(rec.points.size());
        for (const LidarPoint& pt : rec.points) scan.push_back(pt.p);
        const auto scan_voxels = voxelize_scan(scan, fc.voxel_resolution, fc.scan_fallback_sigma);
        std::vector<Vec3> scan_means;  // all voxel means, fed to the local map
        scan_means.reserve(scan_voxels.size());
        for (const ScanVoxel& v : scan_voxels) scan_means.push_back(v.mean);
        const size_t stride = std::max(1, fc.local_stride);
        std::vector<Vec3> scan_reps;  // strided subset for local constraints
        scan_reps.reserve(scan_means.size() / stride + 1);
        for (size_t i = 0; i < scan_means.size(); i += stride) {
          scan_reps.push_back(scan_means[i]);
        }

        const UpdateFlags flags =
            map_update(fs, scan_voxels, scan_reps,
                       prior_map.empty() ? nullptr : &prior_map,
                       local_map.empty() ? nullptr : &local_map, weights, fc.map_update);

        if ((fs.nav.p_WI - last_map_pos).norm() > fc.divergence_limit ||
            !fs.nav.p_WI.allFinite()) {
          throw DivergenceError("run_filter: filter diverged", rec.t);
        }
        if (flags.applied) last_map_pos = fs.nav.p_WI;

        // feed the corrected scan to the local map
        const Mat3 R_WL = fs.nav.R_WI * fs.nav.R_IL;
        const Vec3 p_WL = fs.nav.R_WI * fs.nav.p_IL + fs.nav.p_WI;
        local_map.local_map_update(scan_means, R_WL, p_WL, keyframe, fc.local_map);

        PoseLogEntry e;
        e.t = rec.t;
        e.p = fs.nav.p_WI;
        e.q = Eigen::Quaterniond(fs.nav.R_WI);
        if (e.q.w() < 0.0) e.q.coeffs() = -e.q.coeffs();
        e.v = fs.nav.v_WI;
        e.scale = fs.nav.S_v;
        out.pose_log.push_back(e);
        out.events.push_back({rec.t, flags.iterations, flags.constraint_count, flags.degenerate});
        Eigen::Matrix<double, 6, 6> pc;
        pc.topLeftCorner<3, 3>() = fs.P.block<3, 3>(blk::kPos, blk::kPos);
        pc.topRightCorner<3, 3>() = fs.P.block<3, 3>(blk::kPos, blk::kRot);
        pc.bottomLeftCorner<3, 3>() = fs.P.block<3, 3>(blk::kRot, blk::kPos);
        pc.bottomRightCorner<3, 3>() = fs.P.block<3, 3>(blk::kRot, blk::kRot);
        out.pose_covs.push_back(pc);
        break;
      }
    }
  }
  out.final_state = fs;
  return out;
}

}  // namespace sliw
