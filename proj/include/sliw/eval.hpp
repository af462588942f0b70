#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sliw/so3.hpp"

namespace sliw {

struct PoseLogEntry {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
};

struct PosePair {
  double t = 0.0;
  Vec3 p_est = Vec3::Zero();
  Vec3 p_gt = Vec3::Zero();
  Eigen::Quaterniond q_gt = Eigen::Quaterniond::Identity();
};

struct AssociationResult {
  std::vector<PosePair> pairs;
  size_t dropped = 0;
};

// Pairs each estimate with ground truth interpolated to its timestamp
// (linear position, slerp rotation). Throws std::runtime_error on empty
// overlap.
AssociationResult associate(const std::vector<PoseLogEntry>& est,
                            const std::vector<PoseLogEntry>& gt, double max_dt = 0.05);

struct TrajectoryErrorReport {
  double max_abs = 0.0, mean_abs = 0.0;
  double max_lat = 0.0, mean_lat = 0.0;
  double max_lon = 0.0, mean_lon = 0.0;
  double mileage_km = 0.0;
  std::vector<double> t, abs_err, lat_err, lon_err;  // per-timestamp series
};

// Raw (unaligned) global-frame errors; lateral/longitudinal are the
// components of the planar position error in the ground-truth yaw frame.
TrajectoryErrorReport compute_errors(const std::vector<PosePair>& pairs);

struct NamedReport {
  std::string name;
  TrajectoryErrorReport report;
};

// Writes the comparison CSV (one row per run, documented column order) and a
// JSON plot-data file with the per-timestamp series.
void compare_runs(const std::vector<NamedReport>& reports, const std::string& csv_path,
                  const std::string& plot_path);

std::string comparison_table(const std::vector<NamedReport>& reports);

}  // namespace sliw
