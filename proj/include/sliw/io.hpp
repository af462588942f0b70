#pragma once

#include <string>
#include <vector>

#include "sliw/eval.hpp"
#include "sliw/sim.hpp"

namespace sliw {

// Pose log CSV: header t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,sx,sy,sz.
void write_pose_log(const std::string& path, const std::vector<PoseLogEntry>& entries);

// Throws std::runtime_error naming the offending line on malformed input.
std::vector<PoseLogEntry> read_pose_log(const std::string& path);

std::vector<PoseLogEntry> truth_to_pose_log(const std::vector<GroundTruthPose>& truth);

// Dataset JSON Lines, one record per line:
//   {"t":..,"kind":"imu","omega":[..],"accel":[..]}
//   {"t":..,"kind":"wheel","v":[..],"omega":[..]}
//   {"t":..,"kind":"lidar","points":[x,y,z,ring,...]}
void write_dataset_jsonl(const std::string& path, const std::vector<MeasurementRecord>& records);
std::vector<MeasurementRecord> read_dataset_jsonl(const std::string& path);

}  // namespace sliw
