#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "sliw/constraints.hpp"
#include "sliw/filter.hpp"
#include "sliw/sim.hpp"

namespace sliw {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WorldConfig {
  double length = 500.0;
  double width = 20.0;
  double pillar_spacing = 35.0;
  double sensor_height = 2.0;
  std::vector<PlanePatch> walls;
  std::vector<DynamicBox> dynamic_boxes;
  std::vector<SlipZone> slip_zones;

  WorldModel build(uint64_t seed) const;
};

struct TrajectoryConfig {
  Vec3 start = Vec3::Zero();  // x, y, yaw
  std::vector<TrajectorySegment> segments;

  TrajectorySpec build(double height) const;
};

struct InitCovarianceConfig {
  double position = 0.01;
  double rotation = 3.0462e-4;  // (1 deg)^2
  double velocity = 0.01;
  double bias = 1e-4;
  double scale = 1e-4;
  double body_accel = 1.0;
  double body_rate = 0.1;
  double gravity = 1e-6;
  double extrinsic = 1e-10;

  CovMatrix to_matrix() const;
};

struct FilterConfig {
  ProcessNoise process;
  WheelNoise wheel;
  SemanticWeights weights;
  ClassifyParams classify;
  MapUpdateParams map_update;
  LocalMapParams local_map;
  InitCovarianceConfig init_cov;
  double voxel_resolution = 0.5;
  double scan_fallback_sigma = 0.05;
  int local_stride = 4;  // every n-th scan-voxel mean feeds the local map constraints
  double divergence_limit = 50.0;  // [m] vs last map-updated position
};

struct ExperimentConfig {
  uint64_t seed = 0;
  std::string out_dir = "out";
  WorldConfig world;
  TrajectoryConfig trajectory;
  DatasetRates rates;
  DatasetNoise noise;
  LidarPattern lidar;
  FilterConfig filter;
  bool semantic_weighting = true;
  bool adaptive_scale = true;
  bool dynamic_boxes_in_dataset = true;
};

// Throws ConfigError naming the offending field on missing/invalid input.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& c);
void save_config(const ExperimentConfig& c, const std::string& path);

}  // namespace sliw
