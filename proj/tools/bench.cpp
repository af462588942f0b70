#include <chrono>
#include <cstdio>
#include <random>

#include "sliw/constraints.hpp"
#include "sliw/sim.hpp"
#include "sliw/voxel_map.hpp"

using Clock = std::chrono::steady_clock;

namespace {

template <typename F>
double time_ms(F&& fn, int reps) {
  // warm-up
  fn();
  const auto start = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto end = Clock::now();
  return std::chrono::duration<double, std::milli>(end - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  using namespace sliw;

  const WorldModel world = build_port_world(200.0, 20.0, 35.0);
  const Mat3 R = Mat3::Identity();
  const Vec3 t(50.0, 0.0, 2.0);
  LidarPattern pattern;  // full 0.4 deg azimuth resolution

  std::mt19937_64 rng_a(7), rng_b(7);
  std::vector<LidarPoint> scan;
  const double lidar_serial = time_ms(
      [&] { scan = simulate_lidar_serial(world, R, t, pattern, 0.02, 0.0, rng_a); }, 3);
  const double lidar_parallel =
      time_ms([&] { scan = simulate_lidar(world, R, t, pattern, 0.02, 0.0, rng_b); }, 3);
  report("lidar raycast", lidar_serial, lidar_parallel);
  std::printf("  (%zu points per scan)\n", scan.size());

  // Build a map and scan voxels once, then time the constraint kernels.
  std::vector<Vec3> world_points;
  world_points.reserve(scan.size());
  for (const LidarPoint& p : scan) world_points.push_back(R * p.p + t);
  VoxelMap gmap(0.5, MapKind::kGlobalPrior);
  gmap.insert_points(world_points);
  gmap.finalize(ClassifyParams{});

  std::vector<Vec3> scan_points;
  scan_points.reserve(scan.size());
  for (const LidarPoint& p : scan) scan_points.push_back(p.p);
  const auto scan_voxels = voxelize_scan(scan_points, 0.5);

  NavState x;
  x.p_WI = t;

  SemanticWeights w;
  ConstraintParams cp;
  std::vector<MapConstraint> constraints;
  const double global_serial = time_ms(
      [&] { constraints = global_map_residual_serial(x, scan_voxels, gmap, w, cp); }, 5);
  const double global_parallel =
      time_ms([&] { constraints = global_map_residual(x, scan_voxels, gmap, w, cp); }, 5);
  report("global constraints", global_serial, global_parallel);
  std::printf("  (%zu scan voxels, %zu constraints)\n", scan_voxels.size(), constraints.size());

  std::vector<Vec3> reps;
  reps.reserve(scan_voxels.size());
  for (const ScanVoxel& v : scan_voxels) reps.push_back(v.mean);
  const double local_serial =
      time_ms([&] { constraints = local_map_residual_serial(x, reps, gmap, cp); }, 5);
  const double local_parallel =
      time_ms([&] { constraints = local_map_residual(x, reps, gmap, cp); }, 5);
  report("local constraints", local_serial, local_parallel);
  std::printf("  (%zu scan points, %zu constraints)\n", reps.size(), constraints.size());

  return 0;
}
