#pragma once

#include <map>
#include <string>
#include <vector>

#include "sliw/config.hpp"
#include "sliw/constraints.hpp"
#include "sliw/eval.hpp"
#include "sliw/filter.hpp"
#include "sliw/io.hpp"
#include "sliw/voxel_map.hpp"

namespace sliw {

struct DivergenceError : std::runtime_error {
  double timestamp;
  DivergenceError(const std::string& msg, double t) : std::runtime_error(msg), timestamp(t) {}
};

// Global prior map from static scans posed at ground truth.
VoxelMap build_prior_map(const std::vector<MeasurementRecord>& records,
                         const std::vector<PoseLogEntry>& truth, const FilterConfig& cfg);

std::map<std::string, size_t> label_histogram(const VoxelMap& map);

struct RunEvent {
  double t = 0.0;
  int iterations = 0;
  int constraints = 0;
  bool degenerate = false;
};

struct RunResult {
  std::vector<PoseLogEntry> pose_log;  // one row per LiDAR update
  std::vector<RunEvent> events;
  // position+rotation covariance block at each logged pose, for consistency
  // analysis
  std::vector<Eigen::Matrix<double, 6, 6>> pose_covs;
  FilterState final_state;
};

// Replays the measurement stream: predict to each timestamp, dispatch the
// update by kind, maintain the local map. Initialized from the first truth
// pose. Throws DivergenceError on runaway position error or non-finite state.
RunResult run_filter(const std::vector<MeasurementRecord>& records,
                     const std::vector<PoseLogEntry>& truth, const VoxelMap& prior_map,
                     const ExperimentConfig& cfg);

}  // namespace sliw
