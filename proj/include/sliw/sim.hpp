#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "sliw/so3.hpp"

namespace sliw {

// --- analytic world ----------------------------------------------------------

// Finite rectangular plane patch: anchor + unit normal + half extents along
// two in-plane axes derived from the normal.
struct PlanePatch {
  Vec3 anchor = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double half_u = 50.0;
  double half_v = 50.0;
};

struct Pillar {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // xy [m]
  double radius = 0.10;
  double height = 1.5;
  double base_z = 0.0;
};

// Axis-aligned box translating along a piecewise-linear path; present in
// scans only, never in the prior map.
struct DynamicBox {
  Vec3 half_sizes = Vec3(1.0, 1.0, 1.0);
  std::vector<double> times;          // strictly increasing
  std::vector<Vec3> centers;          // same length as times
  Vec3 center_at(double t) const;
};

struct SlipZone {
  std::vector<Eigen::Vector2d> polygon;  // xy vertices, implicit closure
  Vec3 factor = Vec3::Ones();            // per-axis multiplier on true body velocity
  bool contains(const Eigen::Vector2d& p) const;
};

struct WorldModel {
  std::vector<PlanePatch> ground;
  std::vector<Pillar> pillars;
  std::vector<PlanePatch> walls;
  std::vector<DynamicBox> boxes;
  std::vector<SlipZone> slip_zones;

  // Per-axis slip factor of the zone containing p, or ones.
  Vec3 slip_at(const Eigen::Vector2d& p) const;
};

// Flat ground with two pillar rows at +-width/2, fence-post spacing along x.
WorldModel build_port_world(double length, double width, double pillar_spacing,
                            uint64_t seed = 0);

// --- trajectory --------------------------------------------------------------

struct TrajectorySegment {
  enum class Type { kStraight, kArc, kStop } type = Type::kStraight;
  double length = 0.0;     // straight: [m]; stop unused
  double radius = 0.0;     // arc: [m], > 0
  double angle = 0.0;      // arc: signed sweep [rad], +left
  double duration = 0.0;   // stop: [s]
  double v_entry = 0.0;    // [m/s]
  double v_exit = 0.0;     // [m/s]; linear speed ramp over the segment
};

struct TrajectorySample {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();       // world
  Vec3 a = Vec3::Zero();       // world coordinate acceleration
  Mat3 R = Mat3::Identity();   // vehicle body in world (yaw only)
  Vec3 body_rate = Vec3::Zero();
  double speed = 0.0;
  double yaw = 0.0;
};

// Planar C1 trajectory at a fixed height; segment speeds must chain
// continuously (validated on construction).
class TrajectorySpec {
 public:
  TrajectorySpec(std::vector<TrajectorySegment> segments, double height,
                 const Vec3& start_xyyaw = Vec3::Zero());

  double duration() const { return total_time_; }
  TrajectorySample sample(double t) const;  // throws std::out_of_range

 private:
  struct Piece {
    TrajectorySegment seg;
    double t0 = 0.0, t1 = 0.0;
    double x0 = 0.0, y0 = 0.0, yaw0 = 0.0;
  };
  std::vector<Piece> pieces_;
  double height_;
  double total_time_ = 0.0;
};

// --- sensors -----------------------------------------------------------------

struct LidarPattern {
  int rings = 16;
  double elev_min = -15.0 * M_PI / 180.0;
  double elev_step = 2.0 * M_PI / 180.0;
  double azimuth_step = 0.4 * M_PI / 180.0;
  double max_range = 100.0;
};

struct LidarPoint {
  Vec3 p = Vec3::Zero();  // sensor frame
  int ring = 0;
};

// Nearest analytic intersection per ray; rays with no hit in range produce
// no point. Noise is drawn in fixed ray order from rng, independent of the
// parallel schedule.
std::vector<LidarPoint> simulate_lidar(const WorldModel& world, const Mat3& R_WS,
                                       const Vec3& t_WS, const LidarPattern& pattern,
                                       double range_noise_sigma, double t,
                                       std::mt19937_64& rng, bool include_dynamic = true);

// Serial reference for the raycasting kernel.
std::vector<LidarPoint> simulate_lidar_serial(const WorldModel& world, const Mat3& R_WS,
                                              const Vec3& t_WS, const LidarPattern& pattern,
                                              double range_noise_sigma, double t,
                                              std::mt19937_64& rng, bool include_dynamic = true);

struct ImuSigmas {
  double sigma_a = 0.02;   // [m/s^2]
  double sigma_w = 0.002;  // [rad/s]
};

// Specific-force accelerometer model: R^T (a_W - g_W) + bias + noise.
void simulate_imu(const TrajectorySpec& traj, double t, const Vec3& bias_a,
                  const Vec3& bias_w, const ImuSigmas& sigmas, const Vec3& g_W,
                  std::mt19937_64& rng, Vec3& omega_m, Vec3& accel_m);

// True body velocity scaled by the slip zone containing the position.
void simulate_wheel(const TrajectorySpec& traj, const WorldModel& world, double t,
                    double noise_sigma_v, double noise_sigma_w, std::mt19937_64& rng,
                    Vec3& v_m, Vec3& omega_m);

// --- dataset -----------------------------------------------------------------

enum class RecordKind : uint8_t { kImu = 0, kWheel = 1, kLidar = 2 };

struct MeasurementRecord {
  double t = 0.0;
  RecordKind kind = RecordKind::kImu;
  Vec3 omega = Vec3::Zero();             // imu / wheel
  Vec3 accel_or_vel = Vec3::Zero();      // imu accel / wheel velocity
  std::vector<LidarPoint> points;        // lidar
};

struct GroundTruthPose {
  double t = 0.0;
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

struct DatasetRates {
  double imu_hz = 20.0;
  double wheel_hz = 50.0;
  double lidar_hz = 10.0;
  double truth_hz = 50.0;
};

struct DatasetNoise {
  ImuSigmas imu;
  double lidar_range_sigma = 0.02;
  double wheel_sigma_v = 0.05;
  double wheel_sigma_w = 0.005;
  Vec3 imu_bias_a = Vec3::Zero();
  Vec3 imu_bias_w = Vec3::Zero();
};

struct Dataset {
  std::vector<MeasurementRecord> records;
  std::vector<GroundTruthPose> truth;
};

// Deterministic in (world, traj, config, seed). Streams are phase-shifted
// (imu +1/2 period, wheel +1/2 period) so no two records share a timestamp.
Dataset generate_dataset(const WorldModel& world, const TrajectorySpec& traj,
                         const DatasetRates& rates, const DatasetNoise& noise,
                         const LidarPattern& pattern, uint64_t seed,
                         bool include_dynamic = true);

}  // namespace sliw
